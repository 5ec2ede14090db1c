#include <cmath>

#include <fmt/format.h>

#include "errdecode/csv.hpp"
#include "errdecode/error.hpp"
#include "errdecode/filters.hpp"

namespace errdecode::filters {

void FilterBankSpec::validate(double min_hz, double max_hz) const {
    if (bands.empty()) throw invalid_argument("filter bank has no bands");
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const auto [lo, hi] = bands[i];
        if (!(lo < hi)) throw invalid_argument(fmt::format("band {} is empty ({} >= {})", i, lo, hi));
        if (lo < min_hz || hi > max_hz) {
            throw invalid_argument(fmt::format("band {} [{}, {}] outside [{}, {}]", i, lo, hi, min_hz, max_hz));
        }
        if (i > 0 && bands[i - 1].second != lo) {
            throw invalid_argument(fmt::format("band {} does not start where band {} ends", i, i - 1));
        }
    }
}

FilterBankSpec make_filter_bank(const FilterBankRule& rule) {
    if (!(rule.low_hz < rule.split_hz && rule.split_hz <= rule.high_hz) || !(rule.narrow_width > 0.0) ||
        !(rule.wide_width > 0.0)) {
        throw invalid_argument("inconsistent filter bank rule");
    }
    FilterBankSpec bank;
    // Integer band counts keep the edges exact (no accumulated rounding).
    const auto n_narrow = static_cast<int>(std::ceil((rule.split_hz - rule.low_hz) / rule.narrow_width - 1e-9));
    for (int i = 0; i < n_narrow; ++i) {
        const double lo = rule.low_hz + i * rule.narrow_width;
        bank.bands.emplace_back(lo, std::min(lo + rule.narrow_width, rule.split_hz));
    }
    const auto n_wide = static_cast<int>(std::ceil((rule.high_hz - rule.split_hz) / rule.wide_width - 1e-9));
    for (int i = 0; i < n_wide; ++i) {
        const double lo = rule.split_hz + i * rule.wide_width;
        bank.bands.emplace_back(lo, std::min(lo + rule.wide_width, rule.high_hz));
    }
    return bank;
}

FilterBankSpec default_filter_bank() { return make_filter_bank(FilterBankRule{}); }

std::string filter_bank_to_csv(const FilterBankSpec& bank) {
    CsvTable table;
    table.header = {"band_index", "lo_hz", "hi_hz"};
    for (std::size_t i = 0; i < bank.bands.size(); ++i) {
        table.rows.push_back({std::to_string(i), format_number(bank.bands[i].first),
                              format_number(bank.bands[i].second)});
    }
    return table.to_string();
}

FilterBankSpec filter_bank_from_csv(std::string_view text) {
    const auto table = parse_csv(text);
    const auto lo_col = table.column("lo_hz");
    const auto hi_col = table.column("hi_hz");
    FilterBankSpec bank;
    for (const auto& row : table.rows) bank.bands.emplace_back(parse_number(row[lo_col]), parse_number(row[hi_col]));
    return bank;
}

CleanResult auto_clean(const Recording& rec, double max_abs_uv) {
    if (!(max_abs_uv > 0.0)) throw invalid_argument(fmt::format("cleaning threshold must be positive, got {}", max_abs_uv));
    CleanResult result;
    result.recording = rec;
    const auto n = rec.n_samples();
    result.mask.assign(n, 0);
    const Eigen::RowVectorXd peak = rec.data.cwiseAbs().colwise().maxCoeff();
    for (std::size_t t = 0; t < n; ++t) {
        if (peak(static_cast<Eigen::Index>(t)) > max_abs_uv) result.mask[t] = 1;
    }
    for (std::size_t t = 0; t < n;) {
        if (!result.mask[t]) {
            ++t;
            continue;
        }
        const auto begin = t;
        while (t < n && result.mask[t]) ++t;
        result.segments.emplace_back(begin, t);
    }
    return result;
}

}  // namespace errdecode::filters
