#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "errdecode/classical.hpp"

namespace errdecode {

/// Named tensors flattened into one payload, indexed from the JSON header.
template <typename T>
class ParamPack {
public:
    void add(const std::string& name, const std::vector<std::int64_t>& shape, std::span<const T> data);
    std::vector<T> get(const std::string& name) const;
    std::vector<std::int64_t> shape(const std::string& name) const;

    const nlohmann::json& index() const { return index_; }
    const std::vector<T>& values() const { return values_; }

    static ParamPack from(nlohmann::json index, std::vector<T> values);

private:
    const nlohmann::json& entry(const std::string& name) const;

    nlohmann::json index_ = nlohmann::json::array();
    std::vector<T> values_;
};

extern template class ParamPack<float>;
extern template class ParamPack<double>;

/// Model container: `<dir>/header.json` with model_type, format_version,
/// `meta` and the tensor index; payload `<dir>/params.f64le` or `params.f32le`.
void save_model_container(const std::filesystem::path& dir, const std::string& model_type,
                          const nlohmann::json& meta, const ParamPack<double>& params);
void save_model_container(const std::filesystem::path& dir, const std::string& model_type,
                          const nlohmann::json& meta, const ParamPack<float>& params);

struct ModelHeader {
    std::string model_type;
    nlohmann::json meta;
    nlohmann::json index;
};
ModelHeader read_model_header(const std::filesystem::path& dir);

}  // namespace errdecode

namespace errdecode::classical {

void save_rlda_model(const std::filesystem::path& dir, const RLDAModel& model, const nlohmann::json& meta);
RLDAModel load_rlda_model(const std::filesystem::path& dir, nlohmann::json* meta = nullptr);

void save_fbcsp_model(const std::filesystem::path& dir, const FBCSPModel& model, const nlohmann::json& meta);
FBCSPModel load_fbcsp_model(const std::filesystem::path& dir, nlohmann::json* meta = nullptr);

}  // namespace errdecode::classical
