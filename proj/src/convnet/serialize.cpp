#include <fmt/format.h>

#include "errdecode/container.hpp"
#include "errdecode/convnet/train.hpp"
#include "errdecode/error.hpp"
#include "errdecode/model_io.hpp"

namespace errdecode::convnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<Param<float>*> all_tensors(ConvNetModel& model) {
    auto out = model.params();
    for (auto* b : model.buffers()) out.push_back(b);
    return out;
}

}  // namespace

void save_convnet_model(const fs::path& dir, ConvNetModel& model, const json& meta) {
    json full = meta;
    full["deep4"] = model.config().to_json();
    full["seed"] = model.seed();
    ParamPack<float> pack;
    for (const auto* p : all_tensors(model)) {
        for (const auto v : p->value) {
            if (!std::isfinite(v)) throw numerical_error(fmt::format("tensor '{}' has non-finite values", p->name));
        }
        pack.add(p->name, p->shape, p->value);
    }
    save_model_container(dir, "convnet", full, pack);
}

ConvNetModel load_convnet_model(const fs::path& dir, json* meta) {
    const auto header = read_model_header(dir);
    if (header.model_type != "convnet") {
        throw format_error(fmt::format("expected a convnet model, found {}", header.model_type));
    }
    Deep4Config config;
    std::uint64_t seed = 0;
    try {
        config = Deep4Config::from_json(header.meta.at("deep4"));
        seed = header.meta.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw format_error(fmt::format("malformed convnet model header: {}", e.what()));
    }
    auto model = ConvNetModel::build(config, seed);
    const auto pack = ParamPack<float>::from(header.index, read_f32le(dir / "params.f32le"));
    for (auto* p : all_tensors(model)) {
        if (pack.shape(p->name) != p->shape) throw format_error(fmt::format("tensor '{}' has the wrong shape", p->name));
        p->value = pack.get(p->name);
    }
    if (meta) *meta = header.meta;
    return model;
}

}  // namespace errdecode::convnet
