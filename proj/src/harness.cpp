#include "nlt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "nlt/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace nlt {

namespace {

std::string fmt(double v, const char* spec = "%.10g") {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string kind_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::symmetric: return "symmetric";
        case NoiseKind::asymmetric: return "asymmetric";
        case NoiseKind::openset: return "openset";
    }
    return "symmetric";
}

NoiseKind parse_kind(const std::string& v, const std::string& key) {
    if (v == "symmetric") return NoiseKind::symmetric;
    if (v == "asymmetric") return NoiseKind::asymmetric;
    if (v == "openset") return NoiseKind::openset;
    throw ConfigError("invalid value for " + key + ": " + v);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid value for " + key + ": " + v);
    }
}

long long to_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("invalid value for " + key + ": " + v);
    }
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid value for " + key + ": " + v);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

}  // namespace

void validate(const RunConfig& cfg) {
    if (cfg.name.empty()) throw ConfigError("name must not be empty");
    if (cfg.data.classes < 2) throw ConfigError("data.classes must be at least 2");
    if (cfg.data.per_class < 1) throw ConfigError("data.per_class must be at least 1");
    if (cfg.data.dim < 1) throw ConfigError("data.dim must be at least 1");
    if (cfg.data.test_per_class < 1) throw ConfigError("data.test_per_class must be at least 1");
    if (cfg.data.spread.size() != static_cast<std::size_t>(cfg.data.classes))
        throw ConfigError("data.spread must list one value per class");
    for (double s : cfg.data.spread)
        if (!(s > 0.0)) throw ConfigError("data.spread values must be positive");
    validate(cfg.noise);
    validate(cfg.train);
}

std::vector<std::string> preset_names() {
    return {"sym20", "sym40", "sym80", "asym40", "openset-asym40", "heterogeneous"};
}

RunConfig preset(const std::string& name) {
    RunConfig cfg;
    cfg.name = name;
    cfg.data.classes = 4;
    cfg.data.per_class = 1000;
    cfg.data.dim = 2;
    cfg.data.spread.assign(4, 1.2);
    cfg.data.test_per_class = 500;
    cfg.noise.kind = NoiseKind::symmetric;
    cfg.noise.rate = 0.4;

    if (name == "sym20") {
        cfg.noise.rate = 0.2;
    } else if (name == "sym40") {
        cfg.noise.rate = 0.4;
    } else if (name == "sym80") {
        cfg.noise.rate = 0.8;
    } else if (name == "asym40") {
        cfg.noise.kind = NoiseKind::asymmetric;
        cfg.noise.rate = 0.4;
    } else if (name == "openset-asym40") {
        cfg.noise.kind = NoiseKind::openset;
        cfg.noise.rate = 0.4;
        cfg.noise.ood_class_count = 2;
        cfg.noise.id_kind = NoiseKind::asymmetric;
    } else if (name == "heterogeneous") {
        cfg.data.spread = {0.4, 0.7, 1.1, 2.0};
        cfg.noise.rate = 0.4;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return cfg;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    bool spread_seen = false;
    std::stringstream ss(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(ss, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) throw ConfigError("missing value for " + key);

        if (key == "name") {
            cfg.name = value;
        } else if (key == "data.classes") {
            cfg.data.classes = static_cast<int>(to_int(value, key));
        } else if (key == "data.per_class") {
            cfg.data.per_class = static_cast<int>(to_int(value, key));
        } else if (key == "data.dim") {
            cfg.data.dim = static_cast<int>(to_int(value, key));
        } else if (key == "data.test_per_class") {
            cfg.data.test_per_class = static_cast<int>(to_int(value, key));
        } else if (key == "data.spread") {
            cfg.data.spread.clear();
            for (const auto& item : split_list(value)) cfg.data.spread.push_back(to_double(item, key));
            if (cfg.data.spread.empty()) throw ConfigError("missing value for data.spread");
            spread_seen = true;
        } else if (key == "noise.kind") {
            cfg.noise.kind = parse_kind(value, key);
        } else if (key == "noise.rate") {
            cfg.noise.rate = to_double(value, key);
        } else if (key == "noise.ood_classes") {
            cfg.noise.ood_class_count = static_cast<int>(to_int(value, key));
        } else if (key == "noise.id_kind") {
            cfg.noise.id_kind = parse_kind(value, key);
        } else if (key == "train.total_epochs") {
            cfg.train.total_epochs = static_cast<int>(to_int(value, key));
        } else if (key == "train.warmup_epochs") {
            cfg.train.warmup_epochs = static_cast<int>(to_int(value, key));
        } else if (key == "train.batch_size") {
            cfg.train.batch_size = static_cast<int>(to_int(value, key));
        } else if (key == "train.base_lr") {
            cfg.train.base_lr = to_double(value, key);
        } else if (key == "train.weight_decay") {
            cfg.train.weight_decay = to_double(value, key);
        } else if (key == "train.ema_momentum") {
            cfg.train.ema_momentum = to_double(value, key);
        } else if (key == "train.teacher_alpha") {
            cfg.train.teacher_alpha = to_double(value, key);
        } else if (key == "train.weight_cap") {
            cfg.train.weight_cap = to_double(value, key);
        } else if (key == "train.hidden") {
            cfg.train.hidden_dims.clear();
            for (const auto& item : split_list(value))
                cfg.train.hidden_dims.push_back(static_cast<int>(to_int(item, key)));
        } else if (key == "train.seed") {
            cfg.train.seed = static_cast<std::uint64_t>(to_int(value, key));
        } else if (key == "train.save_every") {
            cfg.train.save_every = static_cast<int>(to_int(value, key));
        } else if (key == "ablation.no_selection") {
            cfg.train.ablation.no_selection = to_bool(value, key);
        } else if (key == "ablation.no_noisy_loss") {
            cfg.train.ablation.no_noisy_loss = to_bool(value, key);
        } else if (key == "ablation.no_consistency") {
            cfg.train.ablation.no_consistency = to_bool(value, key);
        } else if (key == "ablation.no_local_threshold") {
            cfg.train.ablation.no_local_threshold = to_bool(value, key);
        } else if (key == "ablation.no_global_threshold") {
            cfg.train.ablation.no_global_threshold = to_bool(value, key);
        } else if (key == "ablation.no_threshold_ema") {
            cfg.train.ablation.no_threshold_ema = to_bool(value, key);
        } else if (key == "ablation.no_reweight") {
            cfg.train.ablation.no_reweight = to_bool(value, key);
        } else if (key == "ablation.no_distribution_ema") {
            cfg.train.ablation.no_distribution_ema = to_bool(value, key);
        } else if (key == "ablation.no_class_balance") {
            cfg.train.ablation.no_class_balance = to_bool(value, key);
        } else if (key == "out_root") {
            cfg.out_root = value;
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    }
    if (spread_seen && cfg.data.spread.size() == 1)
        cfg.data.spread.assign(cfg.data.classes, cfg.data.spread[0]);
    if (!spread_seen) cfg.data.spread.assign(cfg.data.classes, 1.0);
    validate(cfg);
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    try {
        return parse_config_text(buffer.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string config_to_text(const RunConfig& cfg) {
    std::ostringstream os;
    os << "name = " << cfg.name << "\n";
    os << "data.classes = " << cfg.data.classes << "\n";
    os << "data.per_class = " << cfg.data.per_class << "\n";
    os << "data.dim = " << cfg.data.dim << "\n";
    os << "data.spread = ";
    for (std::size_t i = 0; i < cfg.data.spread.size(); ++i)
        os << (i ? ", " : "") << fmt(cfg.data.spread[i], "%.17g");
    os << "\n";
    os << "data.test_per_class = " << cfg.data.test_per_class << "\n";
    os << "noise.kind = " << kind_name(cfg.noise.kind) << "\n";
    os << "noise.rate = " << fmt(cfg.noise.rate, "%.17g") << "\n";
    if (cfg.noise.kind == NoiseKind::openset) {
        os << "noise.ood_classes = " << cfg.noise.ood_class_count << "\n";
        os << "noise.id_kind = " << kind_name(*cfg.noise.id_kind) << "\n";
    }
    os << "train.total_epochs = " << cfg.train.total_epochs << "\n";
    os << "train.warmup_epochs = " << cfg.train.warmup_epochs << "\n";
    os << "train.batch_size = " << cfg.train.batch_size << "\n";
    os << "train.base_lr = " << fmt(cfg.train.base_lr, "%.17g") << "\n";
    os << "train.weight_decay = " << fmt(cfg.train.weight_decay, "%.17g") << "\n";
    os << "train.ema_momentum = " << fmt(cfg.train.ema_momentum, "%.17g") << "\n";
    os << "train.teacher_alpha = " << fmt(cfg.train.teacher_alpha, "%.17g") << "\n";
    os << "train.weight_cap = " << fmt(cfg.train.weight_cap, "%.17g") << "\n";
    os << "train.hidden = ";
    for (std::size_t i = 0; i < cfg.train.hidden_dims.size(); ++i)
        os << (i ? ", " : "") << cfg.train.hidden_dims[i];
    os << "\n";
    os << "train.seed = " << cfg.train.seed << "\n";
    os << "train.save_every = " << cfg.train.save_every << "\n";
    const AblationFlags& a = cfg.train.ablation;
    os << "ablation.no_selection = " << (a.no_selection ? "true" : "false") << "\n";
    os << "ablation.no_noisy_loss = " << (a.no_noisy_loss ? "true" : "false") << "\n";
    os << "ablation.no_consistency = " << (a.no_consistency ? "true" : "false") << "\n";
    os << "ablation.no_local_threshold = " << (a.no_local_threshold ? "true" : "false") << "\n";
    os << "ablation.no_global_threshold = " << (a.no_global_threshold ? "true" : "false") << "\n";
    os << "ablation.no_threshold_ema = " << (a.no_threshold_ema ? "true" : "false") << "\n";
    os << "ablation.no_reweight = " << (a.no_reweight ? "true" : "false") << "\n";
    os << "ablation.no_distribution_ema = " << (a.no_distribution_ema ? "true" : "false") << "\n";
    os << "ablation.no_class_balance = " << (a.no_class_balance ? "true" : "false") << "\n";
    os << "out_root = " << cfg.out_root << "\n";
    if (!cfg.out_dir.empty()) os << "out_dir = " << cfg.out_dir << "\n";
    return os.str();
}

void write_config_file(const RunConfig& cfg, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << config_to_text(cfg);
}

bool clean_mask(const Dataset& ds, std::size_t i) {
    return ds.given_labels[i] == ds.true_labels[i] && !ds.is_ood[i];
}

SelectionMetrics selection_metrics(const Partition& partition, const Dataset& ds) {
    SelectionMetrics m;
    const int c = ds.class_count;
    std::vector<int> selected_per_class(c, 0), correct_per_class(c, 0);
    std::size_t correct = 0;
    for (int i : partition.clean) {
        ++selected_per_class[ds.given_labels[i]];
        if (clean_mask(ds, i)) {
            ++correct;
            ++correct_per_class[ds.given_labels[i]];
        }
    }
    std::size_t truly_clean = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (clean_mask(ds, i)) ++truly_clean;

    m.precision = partition.clean.empty()
                      ? 1.0
                      : static_cast<double>(correct) / static_cast<double>(partition.clean.size());
    m.recall = truly_clean == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(truly_clean);
    m.per_class_precision.assign(c, 1.0);
    for (int k = 0; k < c; ++k)
        if (selected_per_class[k] > 0)
            m.per_class_precision[k] =
                static_cast<double>(correct_per_class[k]) / selected_per_class[k];
    return m;
}

double evaluate_accuracy(const Mlp& model, const Dataset& test) {
    const Matrix logits = forward(model, test.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* row = logits.row(i);
        int best = 0;
        for (std::size_t cidx = 1; cidx < logits.cols; ++cidx)
            if (row[cidx] > row[best]) best = static_cast<int>(cidx);
        if (best == test.true_labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows);
}

Dataset build_train_dataset(const RunConfig& cfg) {
    Dataset base = generate_blobs(cfg.data.classes, cfg.data.per_class, cfg.data.dim, cfg.data.spread,
                                  derive_seed(cfg.train.seed, Stream::blobs));
    return inject_noise(base, cfg.noise, derive_seed(cfg.train.seed, Stream::noise));
}

Dataset build_test_dataset(const RunConfig& cfg) {
    return generate_blobs(cfg.data.classes, cfg.data.test_per_class, cfg.data.dim, cfg.data.spread,
                          derive_seed(cfg.train.seed, Stream::test_blobs));
}

namespace {

json config_json(const RunConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["data"] = {{"classes", cfg.data.classes},
                 {"per_class", cfg.data.per_class},
                 {"dim", cfg.data.dim},
                 {"spread", cfg.data.spread},
                 {"test_per_class", cfg.data.test_per_class}};
    j["noise"] = {{"kind", kind_name(cfg.noise.kind)},
                  {"rate", cfg.noise.rate},
                  {"ood_classes", cfg.noise.ood_class_count}};
    if (cfg.noise.id_kind) j["noise"]["id_kind"] = kind_name(*cfg.noise.id_kind);
    const AblationFlags& a = cfg.train.ablation;
    j["train"] = {{"total_epochs", cfg.train.total_epochs},
                  {"warmup_epochs", cfg.train.warmup_epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"base_lr", cfg.train.base_lr},
                  {"weight_decay", cfg.train.weight_decay},
                  {"ema_momentum", cfg.train.ema_momentum},
                  {"teacher_alpha", cfg.train.teacher_alpha},
                  {"weight_cap", cfg.train.weight_cap},
                  {"hidden", cfg.train.hidden_dims},
                  {"seed", cfg.train.seed},
                  {"save_every", cfg.train.save_every},
                  {"ablation",
                   {{"no_selection", a.no_selection},
                    {"no_noisy_loss", a.no_noisy_loss},
                    {"no_consistency", a.no_consistency},
                    {"no_local_threshold", a.no_local_threshold},
                    {"no_global_threshold", a.no_global_threshold},
                    {"no_threshold_ema", a.no_threshold_ema},
                    {"no_reweight", a.no_reweight},
                    {"no_distribution_ema", a.no_distribution_ema},
                    {"no_class_balance", a.no_class_balance}}}};
    return j;
}

std::string make_run_dir(const RunConfig& cfg) {
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        return cfg.out_dir;
    }
    std::string root = cfg.out_root;
    if (const char* env = std::getenv("NLT_OUT_ROOT"); env && *env) root = env;

    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::tm tm_buf{};
    localtime_r(&now, &tm_buf);
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_buf);

    std::string base = root + "/" + cfg.name + "-" + stamp + "-s" + std::to_string(cfg.train.seed);
    std::string dir = base;
    for (int k = 1; fs::exists(dir); ++k) dir = base + "-" + std::to_string(k);
    fs::create_directories(dir);
    return dir;
}

void write_epochs_csv(const std::string& path, const std::vector<EpochStats>& epochs) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << "epoch,lr,T_global,clean_count,precision,recall,test_acc,loss_clean,loss_noisy,loss_reg\n";
    for (const EpochStats& e : epochs) {
        os << e.epoch << ',' << fmt(e.lr) << ',' << fmt(e.global_threshold) << ',' << e.clean_count
           << ',' << fmt(e.precision) << ',' << fmt(e.recall) << ',' << fmt(e.test_accuracy) << ','
           << fmt(e.loss_clean) << ',' << fmt(e.loss_noisy) << ',' << fmt(e.loss_reg) << '\n';
    }
}

void write_thresholds_csv(const std::string& path, const std::vector<EpochStats>& epochs) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << "epoch,T_global";
    if (!epochs.empty())
        for (std::size_t c = 0; c < epochs.front().local_thresholds.size(); ++c) os << ",T_local_" << c;
    os << "\n";
    for (const EpochStats& e : epochs) {
        os << e.epoch << ',' << fmt(e.global_threshold);
        for (double t : e.local_thresholds) os << ',' << fmt(t);
        os << '\n';
    }
}

void write_distributions_csv(const std::string& path, const std::vector<EpochStats>& epochs) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << "epoch,class,mu,sigma2,noisy_count,mean_weight,min_weight,max_weight\n";
    for (const EpochStats& e : epochs) {
        for (std::size_t c = 0; c < e.class_mean.size(); ++c) {
            os << e.epoch << ',' << c << ',' << fmt(e.class_mean[c]) << ',' << fmt(e.class_variance[c])
               << ',' << e.noisy_count_per_class[c] << ',' << fmt(e.mean_weight[c]) << ','
               << fmt(e.min_weight[c]) << ',' << fmt(e.max_weight[c]) << '\n';
        }
    }
}

json epoch_json(const EpochStats& e) {
    return json{{"epoch", e.epoch},
                {"lr", e.lr},
                {"T_global", e.global_threshold},
                {"T_local", e.local_thresholds},
                {"clean_count", e.clean_count},
                {"clean_per_class", e.clean_per_class},
                {"precision", e.precision},
                {"recall", e.recall},
                {"per_class_precision", e.per_class_precision},
                {"test_acc", e.test_accuracy},
                {"loss_clean", e.loss_clean},
                {"loss_noisy", e.loss_noisy},
                {"loss_reg", e.loss_reg}};
}

}  // namespace

RunOutcome run(const RunConfig& cfg) {
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();

    const Dataset train_ds = build_train_dataset(cfg);
    const Dataset test_ds = build_test_dataset(cfg);

    RunOutcome outcome;
    outcome.paths.dir = make_run_dir(cfg);
    outcome.paths.epochs_csv = outcome.paths.dir + "/epochs.csv";
    outcome.paths.thresholds_csv = outcome.paths.dir + "/thresholds.csv";
    outcome.paths.distributions_csv = outcome.paths.dir + "/distributions.csv";
    outcome.paths.report_json = outcome.paths.dir + "/report.json";
    outcome.paths.checkpoint = outcome.paths.dir + "/checkpoint.bin";
    outcome.paths.config_echo = outcome.paths.dir + "/config.cfg";

    TrainConfig train_cfg = cfg.train;
    if (train_cfg.save_every > 0 && train_cfg.checkpoint_path.empty())
        train_cfg.checkpoint_path = outcome.paths.checkpoint;

    const EpochObserver observer = [&](const EpochView& ev) {
        const SelectionMetrics m = selection_metrics(*ev.partition, train_ds);
        ev.stats->precision = m.precision;
        ev.stats->recall = m.recall;
        ev.stats->per_class_precision = m.per_class_precision;
        ev.stats->test_accuracy = evaluate_accuracy(*ev.student, test_ds);
    };

    TrainResult result = run_training(make_train_view(train_ds), train_cfg, observer);

    outcome.epochs = result.epochs;
    const EpochStats& last = result.epochs.back();
    outcome.final_test_accuracy = last.test_accuracy;
    outcome.final_selection.precision = last.precision;
    outcome.final_selection.recall = last.recall;
    outcome.final_selection.per_class_precision = last.per_class_precision;
    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_epochs_csv(outcome.paths.epochs_csv, result.epochs);
    write_thresholds_csv(outcome.paths.thresholds_csv, result.epochs);
    write_distributions_csv(outcome.paths.distributions_csv, result.epochs);
    write_config_file(cfg, outcome.paths.config_echo);
    save_checkpoint(outcome.paths.checkpoint,
                    Checkpoint{result.student, result.teacher, result.opt, result.thresholds,
                               result.correction, cfg.train.total_epochs});

    json report;
    report["schema_version"] = 1;
    report["name"] = cfg.name;
    report["config"] = config_json(cfg);
    report["wall_seconds"] = outcome.wall_seconds;
    report["final"] = {{"test_accuracy", last.test_accuracy},
                       {"precision", last.precision},
                       {"recall", last.recall},
                       {"per_class_precision", last.per_class_precision},
                       {"clean_count", last.clean_count},
                       {"clean_per_class", last.clean_per_class}};
    json eps = json::array();
    for (const EpochStats& e : result.epochs) eps.push_back(epoch_json(e));
    report["epochs"] = std::move(eps);
    std::ofstream os(outcome.paths.report_json);
    if (!os) throw ConfigError("cannot open " + outcome.paths.report_json + " for writing");
    os << report.dump(2) << '\n';

    return outcome;
}

namespace {

json load_report(const std::string& dir) {
    const std::string path = dir + "/report.json";
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

}  // namespace

std::string compare_runs(const std::string& dir_a, const std::string& dir_b) {
    const json a = load_report(dir_a);
    const json b = load_report(dir_b);
    if (a["config"]["data"] != b["config"]["data"] || a["config"]["noise"] != b["config"]["noise"] ||
        a["config"]["train"]["seed"] != b["config"]["train"]["seed"])
        throw ConfigError("runs are not comparable: dataset spec or seed differs");

    json delta;
    delta["run_a"] = a["name"];
    delta["run_b"] = b["name"];
    delta["final_delta"] = json::object();
    for (const char* key : {"test_accuracy", "precision", "recall"})
        delta["final_delta"][key] = b["final"][key].get<double>() - a["final"][key].get<double>();
    const json& ea = a["epochs"].back();
    const json& eb = b["epochs"].back();
    for (const char* key : {"loss_clean", "loss_noisy", "loss_reg"})
        delta["final_delta"][key] = eb[key].get<double>() - ea[key].get<double>();
    delta["final_a"] = a["final"];
    delta["final_b"] = b["final"];
    return delta.dump(2);
}

int sweep(const std::string& config_dir) {
    if (!fs::is_directory(config_dir)) throw ConfigError(config_dir + " is not a directory");
    std::vector<std::string> configs;
    for (const auto& entry : fs::directory_iterator(config_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".cfg")
            configs.push_back(entry.path().string());
    std::sort(configs.begin(), configs.end());
    if (configs.empty()) throw ConfigError("no .cfg files in " + config_dir);

    int failures = 0;
    for (const std::string& path : configs) {
        try {
            const RunOutcome out = run(parse_config_file(path));
            std::cout << "ok " << path << " test_acc=" << fmt(out.final_test_accuracy)
                      << " -> " << out.paths.dir << "\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "failed " << path << ": " << e.what() << "\n";
        }
    }
    return failures;
}

}  // namespace nlt
