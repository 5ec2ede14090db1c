#include <fmt/format.h>

#include "errdecode/container.hpp"
#include "errdecode/error.hpp"
#include "errdecode/model_io.hpp"

namespace errdecode {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename T>
void ParamPack<T>::add(const std::string& name, const std::vector<std::int64_t>& shape, std::span<const T> data) {
    std::int64_t count = 1;
    for (const auto s : shape) count *= s;
    if (count != static_cast<std::int64_t>(data.size())) {
        throw invalid_argument(fmt::format("tensor '{}' has {} values for shape of {}", name, data.size(), count));
    }
    index_.push_back({{"name", name}, {"shape", shape}, {"offset", values_.size()}, {"count", data.size()}});
    values_.insert(values_.end(), data.begin(), data.end());
}

template <typename T>
const json& ParamPack<T>::entry(const std::string& name) const {
    for (const auto& e : index_) {
        if (e.at("name").template get<std::string>() == name) return e;
    }
    throw format_error(fmt::format("model payload has no tensor '{}'", name));
}

template <typename T>
std::vector<T> ParamPack<T>::get(const std::string& name) const {
    const auto& e = entry(name);
    const auto offset = e.at("offset").template get<std::size_t>();
    const auto count = e.at("count").template get<std::size_t>();
    if (offset + count > values_.size()) throw format_error(fmt::format("tensor '{}' exceeds payload", name));
    return {values_.begin() + static_cast<std::ptrdiff_t>(offset),
            values_.begin() + static_cast<std::ptrdiff_t>(offset + count)};
}

template <typename T>
std::vector<std::int64_t> ParamPack<T>::shape(const std::string& name) const {
    return entry(name).at("shape").template get<std::vector<std::int64_t>>();
}

template <typename T>
ParamPack<T> ParamPack<T>::from(json index, std::vector<T> values) {
    ParamPack pack;
    pack.index_ = std::move(index);
    pack.values_ = std::move(values);
    std::size_t expected = 0;
    for (const auto& e : pack.index_) expected = std::max(expected, e.at("offset").template get<std::size_t>() + e.at("count").template get<std::size_t>());
    if (expected != pack.values_.size()) {
        throw format_error(fmt::format("payload size mismatch: index covers {} values, payload has {}", expected,
                                       pack.values_.size()));
    }
    return pack;
}

template class ParamPack<float>;
template class ParamPack<double>;

namespace {

template <typename T>
void save_container(const fs::path& dir, const std::string& model_type, const json& meta, const ParamPack<T>& params,
                    const char* payload_name) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    json header;
    header["format_version"] = 1;
    header["model_type"] = model_type;
    header["meta"] = meta;
    header["params"] = params.index();
    header["payload"] = payload_name;
    if constexpr (std::is_same_v<T, float>) {
        write_f32le(dir / payload_name, params.values());
    } else {
        write_f64le(dir / payload_name, params.values());
    }
    write_text(dir / "header.json", header.dump(2) + "\n");
}

}  // namespace

void save_model_container(const fs::path& dir, const std::string& model_type, const json& meta,
                          const ParamPack<double>& params) {
    save_container(dir, model_type, meta, params, "params.f64le");
}

void save_model_container(const fs::path& dir, const std::string& model_type, const json& meta,
                          const ParamPack<float>& params) {
    save_container(dir, model_type, meta, params, "params.f32le");
}

ModelHeader read_model_header(const fs::path& dir) {
    const auto path = dir / "header.json";
    if (!fs::exists(path)) throw format_error(fmt::format("missing header {}", path.string()));
    try {
        const auto header = json::parse(read_text(path));
        if (header.at("format_version").get<int>() != 1) throw format_error("unknown format version");
        if (!header.contains("model_type")) throw format_error(fmt::format("{} is not a model container", dir.string()));
        return {header.at("model_type").get<std::string>(), header.value("meta", json::object()), header.at("params")};
    } catch (const json::exception& e) {
        throw format_error(fmt::format("malformed model header {}: {}", path.string(), e.what()));
    }
}

}  // namespace errdecode

namespace errdecode::classical {

namespace {

std::vector<std::int64_t> vshape(Eigen::Index n) { return {static_cast<std::int64_t>(n)}; }

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void add_rlda(ParamPack<double>& pack, const RLDAModel& model, const std::string& prefix) {
    pack.add(prefix + "weights", vshape(model.weights.size()), as_span(model.weights));
    const double scalars[2] = {model.bias, model.shrinkage_gamma};
    pack.add(prefix + "bias_gamma", {2}, scalars);
}

RLDAModel get_rlda(const ParamPack<double>& pack, const std::string& prefix) {
    RLDAModel model;
    model.weights = to_vector(pack.get(prefix + "weights"));
    const auto scalars = pack.get(prefix + "bias_gamma");
    model.bias = scalars.at(0);
    model.shrinkage_gamma = scalars.at(1);
    return model;
}

ParamPack<double> load_pack(const fs::path& dir, const ModelHeader& header) {
    return ParamPack<double>::from(header.index, read_f64le(dir / "params.f64le"));
}

}  // namespace

void save_rlda_model(const fs::path& dir, const RLDAModel& model, const json& meta) {
    ParamPack<double> pack;
    add_rlda(pack, model, "");
    save_model_container(dir, "rlda", meta, pack);
}

RLDAModel load_rlda_model(const fs::path& dir, json* meta) {
    const auto header = read_model_header(dir);
    if (header.model_type != "rlda") throw format_error(fmt::format("expected an rlda model, found {}", header.model_type));
    if (meta) *meta = header.meta;
    return get_rlda(load_pack(dir, header), "");
}

void save_fbcsp_model(const fs::path& dir, const FBCSPModel& model, const json& meta) {
    json full = meta;
    full["fbcsp"] = {{"n_pairs", model.config.n_pairs},
                     {"n_selected", model.config.n_selected},
                     {"filter_order", model.config.filter_order},
                     {"mi_bins", model.config.mi_bins},
                     {"sample_rate_hz", model.sample_rate_hz},
                     {"interval", {model.interval.start_s, model.interval.end_s}},
                     {"band_indices", model.band_indices},
                     {"bands", model.bands}};
    json selected = json::array();
    for (const auto& s : model.selected) selected.push_back({s.band, s.filter});
    full["fbcsp"]["selected"] = selected;

    ParamPack<double> pack;
    for (std::size_t b = 0; b < model.csp.size(); ++b) {
        const auto& csp = model.csp[b];
        pack.add(fmt::format("csp{}.filters", b), {csp.filters.rows(), csp.filters.cols()},
                 {csp.filters.data(), static_cast<std::size_t>(csp.filters.size())});
        pack.add(fmt::format("csp{}.eigenvalues", b), vshape(csp.eigenvalues.size()), as_span(csp.eigenvalues));
    }
    add_rlda(pack, model.classifier, "rlda.");
    save_model_container(dir, "fbcsp", full, pack);
}

FBCSPModel load_fbcsp_model(const fs::path& dir, json* meta) {
    const auto header = read_model_header(dir);
    if (header.model_type != "fbcsp") throw format_error(fmt::format("expected an fbcsp model, found {}", header.model_type));
    if (meta) *meta = header.meta;
    const auto pack = load_pack(dir, header);
    try {
        const auto& f = header.meta.at("fbcsp");
        FBCSPModel model;
        model.config.n_pairs = f.at("n_pairs").get<int>();
        model.config.n_selected = f.at("n_selected").get<std::size_t>();
        model.config.filter_order = f.at("filter_order").get<int>();
        model.config.mi_bins = f.at("mi_bins").get<int>();
        model.sample_rate_hz = f.at("sample_rate_hz").get<double>();
        const auto iv = f.at("interval").get<std::vector<double>>();
        model.interval = {iv.at(0), iv.at(1)};
        model.band_indices = f.at("band_indices").get<std::vector<std::size_t>>();
        model.bands = f.at("bands").get<std::vector<std::pair<double, double>>>();
        for (const auto& s : f.at("selected")) model.selected.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
        for (std::size_t b = 0; b < model.bands.size(); ++b) {
            CSPModel csp;
            csp.n_pairs = model.config.n_pairs;
            const auto name = fmt::format("csp{}.filters", b);
            const auto shape = pack.shape(name);
            const auto values = pack.get(name);
            csp.filters = Eigen::Map<const Eigen::MatrixXd>(values.data(), shape.at(0), shape.at(1));
            csp.eigenvalues = to_vector(pack.get(fmt::format("csp{}.eigenvalues", b)));
            model.csp.push_back(std::move(csp));
        }
        model.classifier = get_rlda(pack, "rlda.");
        return model;
    } catch (const json::exception& e) {
        throw format_error(fmt::format("malformed fbcsp model header: {}", e.what()));
    }
}

}  // namespace errdecode::classical
