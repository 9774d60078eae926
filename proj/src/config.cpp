#include "realdiff/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace realdiff {

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
    throw std::runtime_error("config key \"" + key + "\": " + what);
}

int get_int(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer()) bad_key(key, "expected an integer");
    return v.get<int>();
}

double get_double(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) bad_key(key, "expected a number");
    return v.get<double>();
}

uint64_t get_u64(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
        bad_key(key, "expected a nonnegative integer");
    return v.get<uint64_t>();
}

std::string get_string(const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) bad_key(key, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> get_string_list(const nlohmann::json& v, const std::string& key) {
    if (!v.is_array()) bad_key(key, "expected an array of strings");
    std::vector<std::string> out;
    for (const nlohmann::json& e : v) {
        if (!e.is_string()) bad_key(key, "expected an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::vector<double> get_double_list(const nlohmann::json& v, const std::string& key) {
    if (!v.is_array()) bad_key(key, "expected an array of numbers");
    std::vector<double> out;
    for (const nlohmann::json& e : v) {
        if (!e.is_number()) bad_key(key, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

}  // namespace

void RunConfig::validate() const {
    if (lambda.size() != 3) bad_key("lambda", "expected exactly 3 weights");
    if (mono_blur < 0) bad_key("mono_blur", "must be >= 0");
    if (!(iso > 0.0 && iso < 1.0)) bad_key("iso", "must lie strictly between 0 and 1");
    if (!(tau > 0.0)) bad_key("tau", "must be > 0");
    if (eval_samples < 1) bad_key("eval_samples", "must be >= 1");
    if (eval_completions < 1) bad_key("eval_completions", "must be >= 1");
    if (emd_max_exact < 1) bad_key("emd_max_exact", "must be >= 1");
    config_sampler_mode(*this);
    config_render_mode(*this);
    dataset_params(*this).validate();
    train_config(*this).validate();
}

RunConfig parse_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config: top level must be a JSON object");

    RunConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "data_dir") cfg.data_dir = get_string(value, key);
        else if (key == "n_objects") cfg.n_objects = get_int(value, key);
        else if (key == "views_per_object") cfg.views_per_object = get_int(value, key);
        else if (key == "image_size") cfg.image_size = get_int(value, key);
        else if (key == "grid_n") cfg.grid_n = get_int(value, key);
        else if (key == "voxel_size") cfg.voxel_size = get_double(value, key);
        else if (key == "noise_sigma") cfg.noise_sigma = get_double(value, key);
        else if (key == "dropout_p") cfg.dropout_p = get_double(value, key);
        else if (key == "points_per_cloud") cfg.points_per_cloud = get_int(value, key);
        else if (key == "second_view_ratio") cfg.second_view_ratio = get_double(value, key);
        else if (key == "categories") cfg.categories = get_string_list(value, key);
        else if (key == "T") cfg.T = get_int(value, key);
        else if (key == "beta0") cfg.beta0 = get_double(value, key);
        else if (key == "betaT") cfg.betaT = get_double(value, key);
        else if (key == "sampler_mode") cfg.sampler_mode = get_string(value, key);
        else if (key == "render_mode") cfg.render_mode = get_string(value, key);
        else if (key == "render_samples") cfg.render_samples = get_int(value, key);
        else if (key == "w_min") cfg.w_min = get_double(value, key);
        else if (key == "phase1_epochs") cfg.phase1_epochs = get_int(value, key);
        else if (key == "phase2_epochs") cfg.phase2_epochs = get_int(value, key);
        else if (key == "batch") cfg.batch = get_int(value, key);
        else if (key == "lr") cfg.lr = get_double(value, key);
        else if (key == "lambda") cfg.lambda = get_double_list(value, key);
        else if (key == "embed_dim") cfg.embed_dim = get_int(value, key);
        else if (key == "hidden") cfg.hidden = get_int(value, key);
        else if (key == "mono_blur") cfg.mono_blur = get_int(value, key);
        else if (key == "iso") cfg.iso = get_double(value, key);
        else if (key == "tau") cfg.tau = get_double(value, key);
        else if (key == "eval_samples") cfg.eval_samples = get_int(value, key);
        else if (key == "eval_completions") cfg.eval_completions = get_int(value, key);
        else if (key == "emd_max_exact") cfg.emd_max_exact = get_int(value, key);
        else if (key == "seed") cfg.seed = get_u64(value, key);
        else bad_key(key, "unknown key");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

std::string dump_config(const RunConfig& cfg) {
    const nlohmann::json j = {
        {"data_dir", cfg.data_dir},
        {"n_objects", cfg.n_objects},
        {"views_per_object", cfg.views_per_object},
        {"image_size", cfg.image_size},
        {"grid_n", cfg.grid_n},
        {"voxel_size", cfg.voxel_size},
        {"noise_sigma", cfg.noise_sigma},
        {"dropout_p", cfg.dropout_p},
        {"points_per_cloud", cfg.points_per_cloud},
        {"second_view_ratio", cfg.second_view_ratio},
        {"categories", cfg.categories},
        {"T", cfg.T},
        {"beta0", cfg.beta0},
        {"betaT", cfg.betaT},
        {"sampler_mode", cfg.sampler_mode},
        {"render_mode", cfg.render_mode},
        {"render_samples", cfg.render_samples},
        {"w_min", cfg.w_min},
        {"phase1_epochs", cfg.phase1_epochs},
        {"phase2_epochs", cfg.phase2_epochs},
        {"batch", cfg.batch},
        {"lr", cfg.lr},
        {"lambda", cfg.lambda},
        {"embed_dim", cfg.embed_dim},
        {"hidden", cfg.hidden},
        {"mono_blur", cfg.mono_blur},
        {"iso", cfg.iso},
        {"tau", cfg.tau},
        {"eval_samples", cfg.eval_samples},
        {"eval_completions", cfg.eval_completions},
        {"emd_max_exact", cfg.emd_max_exact},
        {"seed", cfg.seed},
    };
    return j.dump(2);
}

uint64_t stage_seed(uint64_t master_seed, std::string_view stage) {
    return Rng(master_seed).stream(stage).seed();
}

DatasetParams dataset_params(const RunConfig& cfg) {
    DatasetParams p;
    p.n_objects = cfg.n_objects;
    p.views_per_object = cfg.views_per_object;
    p.image_size = cfg.image_size;
    p.grid_n = cfg.grid_n;
    p.voxel_size = cfg.voxel_size;
    p.noise_sigma = cfg.noise_sigma;
    p.dropout_p = cfg.dropout_p;
    p.points_per_cloud = cfg.points_per_cloud;
    p.second_view_ratio = cfg.second_view_ratio;
    for (const std::string& c : cfg.categories) {
        try {
            p.categories.push_back(category_from_string(c));
        } catch (const std::exception& e) {
            bad_key("categories", e.what());
        }
    }
    return p;
}

TrainConfig train_config(const RunConfig& cfg) {
    TrainConfig tc;
    tc.phase1_epochs = cfg.phase1_epochs;
    tc.phase2_epochs = cfg.phase2_epochs;
    tc.batch = cfg.batch;
    tc.lr = cfg.lr;
    tc.seed = stage_seed(cfg.seed, "train");
    if (cfg.lambda.size() != 3) bad_key("lambda", "expected exactly 3 weights");
    tc.weights = LossWeights{cfg.lambda[0], cfg.lambda[1], cfg.lambda[2]};
    tc.T = cfg.T;
    tc.beta0 = cfg.beta0;
    tc.betaT = cfg.betaT;
    tc.embed_dim = cfg.embed_dim;
    tc.hidden = cfg.hidden;
    tc.render_samples = cfg.render_samples;
    tc.render_mode = config_render_mode(cfg);
    tc.w_min = cfg.w_min;
    tc.second_view_ratio = cfg.second_view_ratio;
    return tc;
}

SamplerMode config_sampler_mode(const RunConfig& cfg) {
    try {
        return sampler_mode_from_string(cfg.sampler_mode);
    } catch (const std::exception& e) {
        bad_key("sampler_mode", e.what());
    }
}

RenderMode config_render_mode(const RunConfig& cfg) {
    if (cfg.render_mode == "compositing") return RenderMode::Compositing;
    if (cfg.render_mode == "paper") return RenderMode::Paper;
    bad_key("render_mode", "expected \"compositing\" or \"paper\"");
}

}  // namespace realdiff
