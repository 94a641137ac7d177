#include "qpk/errors.hpp"
#include "qpk/harness.hpp"
#include "qpk/io.hpp"
#include "qpk/optim.hpp"

#include <json.hpp>

#include <cstdlib>
#include <set>

namespace qpk::harness {

namespace {

using nlohmann::json;

json dataset_to_json(const DatasetSpec& s) {
    return json{{"d", s.d},
                {"d_prime", s.d_prime},
                {"noise", s.noise},
                {"n", s.n},
                {"train_fraction", s.train_fraction},
                {"noise_is_variance", s.noise_is_variance}};
}

DatasetSpec dataset_from_json(const json& j) {
    DatasetSpec s;
    s.d = j.value("d", s.d);
    s.d_prime = j.value("d_prime", s.d_prime);
    s.noise = j.value("noise", s.noise);
    s.n = j.value("n", s.n);
    s.train_fraction = j.value("train_fraction", s.train_fraction);
    s.noise_is_variance = j.value("noise_is_variance", s.noise_is_variance);
    return s;
}

json model_to_json(const ModelSpec& s) {
    return json{{"layers", s.layers},
                {"loss", s.loss},
                {"optimizer", s.optimizer},
                {"learning_rate", s.learning_rate},
                {"epochs", s.epochs},
                {"double_zz_for_d2", s.double_zz_for_d2}};
}

ModelSpec model_from_json(const json& j) {
    ModelSpec s;
    s.layers = j.value("layers", s.layers);
    s.loss = j.value("loss", s.loss);
    s.optimizer = j.value("optimizer", s.optimizer);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.epochs = j.value("epochs", s.epochs);
    s.double_zz_for_d2 = j.value("double_zz_for_d2", s.double_zz_for_d2);
    return s;
}

json kernel_to_json(const KernelSpec& s) {
    return json{{"include_final_epoch", s.include_final_epoch},
                {"effective", s.effective},
                {"effective_rel_tol", s.effective_rel_tol},
                {"qntk_at", s.qntk_at}};
}

KernelSpec kernel_from_json(const json& j) {
    KernelSpec s;
    s.include_final_epoch = j.value("include_final_epoch", s.include_final_epoch);
    s.effective = j.value("effective", s.effective);
    s.effective_rel_tol = j.value("effective_rel_tol", s.effective_rel_tol);
    s.qntk_at = j.value("qntk_at", s.qntk_at);
    return s;
}

json svm_to_json(const SvmSpec& s) {
    return json{{"C", s.c}, {"tol", s.tol}, {"max_passes", s.max_passes}};
}

SvmSpec svm_from_json(const json& j) {
    SvmSpec s;
    s.c = j.value("C", s.c);
    s.tol = j.value("tol", s.tol);
    s.max_passes = j.value("max_passes", s.max_passes);
    return s;
}

json baseline_to_json(const BaselineSpec& s) {
    return json{{"dims", s.dims},
                {"d_prime", s.d_prime},
                {"noise", s.noise},
                {"repeats", s.repeats},
                {"pool", s.pool},
                {"epochs", s.epochs},
                {"learning_rate", s.learning_rate},
                {"train_fraction", s.train_fraction},
                {"select_by", s.select_by},
                {"w1_d", s.w1_d},
                {"w1_noise", s.w1_noise}};
}

BaselineSpec baseline_from_json(const json& j) {
    BaselineSpec s;
    s.dims = j.value("dims", s.dims);
    s.d_prime = j.value("d_prime", s.d_prime);
    s.noise = j.value("noise", s.noise);
    s.repeats = j.value("repeats", s.repeats);
    s.pool = j.value("pool", s.pool);
    s.epochs = j.value("epochs", s.epochs);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.train_fraction = j.value("train_fraction", s.train_fraction);
    s.select_by = j.value("select_by", s.select_by);
    s.w1_d = j.value("w1_d", s.w1_d);
    s.w1_noise = j.value("w1_noise", s.w1_noise);
    return s;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["dataset"] = dataset_to_json(cfg.dataset);
    j["model"] = model_to_json(cfg.model);
    j["kernel"] = kernel_to_json(cfg.kernel);
    j["svm"] = svm_to_json(cfg.svm);
    if (cfg.baseline) {
        j["baseline"] = baseline_to_json(*cfg.baseline);
    }
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir;
    j["jobs"] = cfg.jobs;
    return j;
}

} // namespace

void ExperimentConfig::validate() const {
    if (dataset.d < 1 || dataset.d > 24) {
        throw ParameterError("dataset.d must be in [1, 24]");
    }
    if (dataset.d_prime < 1 || dataset.d_prime > dataset.d) {
        throw ParameterError("dataset.d_prime must be in [1, d]");
    }
    if (dataset.noise.empty()) {
        throw ParameterError("dataset.noise must list at least one level");
    }
    for (const double e : dataset.noise) {
        if (e < 0.0) throw ParameterError("noise levels must be >= 0");
    }
    if (dataset.n < 2) {
        throw ParameterError("dataset.n must be >= 2");
    }
    if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
        throw ParameterError("dataset.train_fraction must be in (0, 1)");
    }
    if (model.layers.empty()) {
        throw ParameterError("model.layers must list at least one depth");
    }
    for (const int l : model.layers) {
        if (l < 1) throw ParameterError("layer counts must be >= 1");
    }
    if (std::set<int>(model.layers.begin(), model.layers.end()).size() != model.layers.size()) {
        throw ParameterError("model.layers contains duplicates");
    }
    optim::loss_from_string(model.loss);
    optim::optimizer_from_string(model.optimizer);
    if (!(model.learning_rate > 0.0)) {
        throw ParameterError("model.learning_rate must be positive");
    }
    if (model.epochs < 1) {
        throw ParameterError("model.epochs must be >= 1");
    }
    if (kernel.effective_rel_tol < 0.0) {
        throw ParameterError("kernel.effective_rel_tol must be >= 0");
    }
    if (kernel.qntk_at != "final" && kernel.qntk_at != "init") {
        throw ParameterError("kernel.qntk_at must be 'final' or 'init'");
    }
    if (!(svm.c > 0.0) || !(svm.tol > 0.0) || svm.max_passes < 1) {
        throw ParameterError("svm spec must have C > 0, tol > 0, max_passes >= 1");
    }
    if (seeds.empty()) {
        throw ParameterError("seeds must list at least one value");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ParameterError("seeds contains duplicates");
    }
    if (output_dir.empty()) {
        throw ParameterError("output_dir must not be empty");
    }
    if (jobs < 0) {
        throw ParameterError("jobs must be >= 0");
    }
    if (baseline) {
        if (baseline->dims.empty() || baseline->noise.empty()) {
            throw ParameterError("baseline needs at least one dimension and noise level");
        }
        for (const int d : baseline->dims) {
            if (d < baseline->d_prime) {
                throw ParameterError("baseline dims must be >= d_prime");
            }
        }
        if (baseline->repeats < 1 || baseline->pool < 1 || baseline->epochs < 1) {
            throw ParameterError("baseline repeats/pool/epochs must be >= 1");
        }
        if (baseline->select_by != "test" && baseline->select_by != "train") {
            throw ParameterError("baseline.select_by must be 'test' or 'train'");
        }
        if (baseline->w1_d < baseline->d_prime + 1) {
            throw ParameterError("baseline.w1_d must exceed d_prime");
        }
    }
}

std::string ExperimentConfig::to_json_text() const { return config_to_json(*this).dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParameterError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    if (j.contains("dataset")) cfg.dataset = dataset_from_json(j["dataset"]);
    if (j.contains("model")) cfg.model = model_from_json(j["model"]);
    if (j.contains("kernel")) cfg.kernel = kernel_from_json(j["kernel"]);
    if (j.contains("svm")) cfg.svm = svm_from_json(j["svm"]);
    if (j.contains("baseline")) cfg.baseline = baseline_from_json(j["baseline"]);
    cfg.seeds = j.value("seeds", cfg.seeds);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.jobs = j.value("jobs", cfg.jobs);
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ParameterError("config file not found: " + path.string());
    }
    return from_json_text(io::read_file(path));
}

std::string ExperimentConfig::config_hash() const {
    json j = config_to_json(*this);
    j.erase("output_dir"); // location and parallelism never change results
    j.erase("jobs");
    return io::content_hash(j.dump());
}

std::filesystem::path ExperimentConfig::run_root() const {
    return std::filesystem::path(output_dir) / config_hash();
}

int ExperimentConfig::effective_jobs() const {
    if (jobs > 0) return jobs;
    if (const char* env = std::getenv("QPK_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

} // namespace qpk::harness
