#include "hinfomax/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hinfomax/analyze.hpp"
#include "hinfomax/errors.hpp"
#include "hinfomax/ingest.hpp"
#include "hinfomax/io.hpp"
#include "hinfomax/parallel.hpp"
#include "hinfomax/train.hpp"
#include "hinfomax/whiten.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace hinfomax {

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        kv[key] = value;
    }
    return kv;
}

namespace {

class Stopwatch {
public:
    void stage(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        if (!current_.empty()) times_[current_] = std::chrono::duration<double>(now - start_).count();
        current_ = name;
        start_ = now;
    }
    json finish() {
        stage("");
        return times_;
    }

private:
    std::string current_;
    std::chrono::steady_clock::time_point start_;
    json times_ = json::object();
};

class Manifest {
public:
    Manifest(std::string command, json config, int threads) {
        j_["tool"] = "hinfomax";
        j_["version"] = kToolVersion;
        j_["command"] = std::move(command);
        j_["config"] = std::move(config);
        j_["threads"] = threads;
        j_["inputs"] = json::array();
        j_["outputs"] = json::array();
    }
    void input(const fs::path& p) { j_["inputs"].push_back({{"path", p.string()}, {"sha256", io::sha256_file(p)}}); }
    void output(const fs::path& p, bool timing = false) {
        j_["outputs"].push_back({{"path", p.string()}, {"sha256", io::sha256_file(p)}, {"timing", timing}});
    }
    json& operator[](const char* key) { return j_[key]; }
    void write(const fs::path& p, json stages) {
        j_["stages_seconds"] = std::move(stages);
        io::write_file_atomic(p, j_.dump(2) + "\n");
    }

private:
    json j_;
};

struct Registry {
    // Flag name -> writes the resolved value into the config object.
    std::vector<std::function<void(json&)>> record;
};

template <class T>
CLI::Option* add(CLI::App* sub, Registry& reg, const std::string& name, T& target, const std::string& help) {
    reg.record.push_back([&target, name](json& j) { j[name] = target; });
    return sub->add_option("--" + name, target, help)->capture_default_str();
}

CLI::Option* add_flag(CLI::App* sub, Registry& reg, const std::string& name, bool& target, const std::string& help) {
    reg.record.push_back([&target, name](json& j) { j[name] = target; });
    return sub->add_flag("--" + name, target, help);
}

json resolved(const Registry& reg) {
    json j = json::object();
    for (const auto& r : reg.record) r(j);
    return j;
}

void require(const std::string& value, const std::string& name) {
    if (value.empty()) throw ConfigError("missing required option --" + name);
}

void apply_config(CLI::App& app, CLI::App* sub, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "config") continue;
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (!opt) opt = app.get_option_no_throw("--" + key);
        if (!opt) throw ConfigError("config file: unknown key '" + key + "' for '" + sub->get_name() + "'");
        if (opt->count() > 0) continue;  // command line wins
        if (opt->get_items_expected_max() > 1) {
            std::istringstream parts(value);
            std::vector<std::string> items;
            for (std::string s; parts >> s;) items.push_back(s);
            opt->add_result(items);
        } else {
            opt->add_result(value);
        }
        opt->run_callback();
    }
}

std::vector<std::string> config_to_args(const std::string& command, const json& config) {
    std::vector<std::string> args{command};
    for (const auto& [key, value] : config.items()) {
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
        } else if (value.is_array()) {
            if (value.empty()) continue;
            args.push_back("--" + key);
            for (const auto& v : value) args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        } else if (value.is_string()) {
            if (value.get<std::string>().empty()) continue;
            args.push_back("--" + key);
            args.push_back(value.get<std::string>());
        } else {
            args.push_back("--" + key);
            args.push_back(value.dump());
        }
    }
    return args;
}

std::vector<ImageGray> load_images(const fs::path& path) {
    const auto bytes = io::read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P') return {parse_pgm(bytes)};
    if (bytes.size() >= 4 && bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 0x08 && bytes[3] == 0x03)
        return parse_idx_images(bytes);
    throw FormatError("'" + path.string() + "' is neither a PGM nor an IDX image file");
}

int patch_width_for(Eigen::Index dim, int requested) {
    const int w = requested > 0 ? requested : static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
    if (static_cast<Eigen::Index>(w) * w != dim)
        throw ShapeError("patch dimension " + std::to_string(dim) + " is not a square patch" +
                         (requested > 0 ? " of width " + std::to_string(requested) : std::string()));
    return w;
}

TuningParams params_from_checkpoint(const Checkpoint& ckpt, int t0) {
    TuningParams p = init_tuning(ckpt.filters.k0(), ckpt.filters.k1(), t0);
    p.beta = ckpt.beta;
    p.bias = ckpt.bias;
    return p;
}

fs::path sibling(const fs::path& file, const std::string& name) {
    return file.has_parent_path() ? file.parent_path() / name : fs::path(name);
}

void check_epsilon(double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("--epsilon must lie in (0, 1]");
}

struct Global {
    int threads = 1;
    std::string config;
};

struct SampleOpts {
    std::vector<std::string> images;
    std::string image_dir;
    int patch_width = 12;
    std::int64_t count = 100000;
    std::uint64_t seed = 0;
    std::string out;
};

struct TrainOpts {
    std::string patches;
    int patch_width = 0;
    int k1 = 144;
    double epsilon = 1.0;
    int epochs = 300;
    int t0 = 50;
    double v1 = 0.4;
    double tau = 0.8;
    std::string alg = "auto";
    std::uint64_t seed = 0;
    bool train_bias = false;
    std::int64_t batch_size = 0;
    int metrics_every = 10;
    double n = 1e6;
    std::int64_t cde_samples = 1000;
    std::string out_dir = "run";
};

struct MetricsOpts {
    std::string checkpoint;
    std::string whitening;
    std::string patches;
    double n = 1e6;
    std::int64_t cde_samples = 0;
    std::string out;
};

struct ExportOpts {
    std::string checkpoint;
    std::string whitening;
    std::string out_dir = "export";
};

struct DenoiseOpts {
    std::string clean;
    std::string noisy;
    std::string original;
    int patch_width = 7;
    double epsilon = 0.975;
    int k1 = 0;
    std::int64_t samples = 20000;
    int epochs = 300;
    int t0 = 50;
    double v1 = 0.4;
    double tau = 0.8;
    std::uint64_t seed = 0;
    std::string out;
};

struct ReplayOpts {
    std::string manifest;
    bool verify = false;
};

int cmd_sample(const SampleOpts& o, const json& config, const Global& g, std::ostream& out) {
    require(o.out, "out");
    std::vector<fs::path> paths(o.images.begin(), o.images.end());
    if (!o.image_dir.empty()) {
        if (!fs::is_directory(o.image_dir)) throw IoError("'" + o.image_dir + "' is not a directory");
        std::vector<fs::path> found;
        for (const auto& e : fs::directory_iterator(o.image_dir))
            if (e.is_regular_file() && e.path().extension() == ".pgm") found.push_back(e.path());
        std::sort(found.begin(), found.end());
        paths.insert(paths.end(), found.begin(), found.end());
    }
    if (paths.empty()) throw ConfigError("no input images (use --images or --image-dir)");

    Stopwatch sw;
    Manifest manifest("sample", config, g.threads);
    sw.stage("load");
    std::vector<ImageGray> images;
    for (const auto& p : paths) {
        auto loaded = load_images(p);
        images.insert(images.end(), std::make_move_iterator(loaded.begin()), std::make_move_iterator(loaded.end()));
        manifest.input(p);
    }
    sw.stage("sample");
    SamplerConfig sc{o.patch_width, o.count, o.seed};
    const PatchMatrix patches = sample_patches(images, sc);
    sw.stage("write");
    io::save_mat1(o.out, patches.data);
    manifest.output(o.out);
    manifest["seed"] = o.seed;
    manifest.write(o.out + ".manifest.json", sw.finish());
    out << "sampled " << patches.samples() << " patches of " << o.patch_width << "x" << o.patch_width << " from "
        << images.size() << " images -> " << o.out << "\n";
    return 0;
}

int cmd_train(const TrainOpts& o, const json& config, const Global& g, std::ostream& out) {
    require(o.patches, "patches");
    check_epsilon(o.epsilon);
    if (o.k1 < 1) throw ConfigError("--k1 must be positive");
    if (o.metrics_every < 0) throw ConfigError("--metrics-every must be non-negative");
    if (!(o.n >= 1.0)) throw ConfigError("--n must be at least 1");

    Stopwatch sw;
    Manifest manifest("train", config, g.threads);
    sw.stage("load");
    PatchMatrix patches;
    patches.data = io::load_mat1(o.patches);
    patches.patch_width = patch_width_for(patches.dim(), o.patch_width);
    manifest.input(o.patches);

    sw.stage("whiten");
    const WhiteningModel model = fit_whitening(patches, o.epsilon);
    const int k0 = model.retained_rank;
    const Eigen::MatrixXd xhat = transform(model, patches.data, WhitenMode::whiten);
    const Eigen::MatrixXd x_check = model.basis() * xhat;

    TrainConfig cfg;
    cfg.algorithm = o.alg == "auto" ? (k0 == o.k1 ? Algorithm::alg1 : Algorithm::alg2) : parse_algorithm(o.alg);
    cfg.t_max = o.epochs;
    cfg.t0 = o.t0;
    cfg.v1 = o.v1;
    cfg.tau = o.tau;
    cfg.seed = o.seed;
    cfg.train_bias = o.train_bias;
    cfg.batch_size = o.batch_size;
    cfg.threads = g.threads;
    validate(cfg);
    if (cfg.algorithm == Algorithm::exact && static_cast<double>(o.k1) * static_cast<double>(xhat.cols()) > 1e6)
        throw ConfigError("alg=exact refuses K1*M = " + std::to_string(static_cast<std::int64_t>(o.k1) * xhat.cols()) +
                          " > 1e6; use alg2 or fewer samples");
    if (cfg.algorithm == Algorithm::alg1 && k0 != o.k1)
        throw ConfigError("alg1 needs K0 == K1 but K0=" + std::to_string(k0) + ", K1=" + std::to_string(o.k1));
    if (k0 > o.k1)
        throw ConfigError("K1=" + std::to_string(o.k1) + " is below the retained rank K0=" + std::to_string(k0));
    out << "K0=" << k0 << " K1=" << o.k1 << " alg=" << to_string(cfg.algorithm) << "\n";

    const TuningParams params = init_tuning(k0, o.k1, cfg.t0);
    std::vector<MetricsReport> metrics;
    const auto t_start = std::chrono::steady_clock::now();
    auto record_metrics = [&](int epoch, const FilterBank& f, const TuningParams& p) {
        MetricsReport r;
        r.epoch = epoch;
        r.population_n = o.n;
        const Dictionary d{Eigen::MatrixXd(), Eigen::MatrixXd(), model.basis() * f.C};
        r.cfe_bits = coefficient_entropy(d, x_check, {}, g.threads);
        r.cde_nats = conditional_entropy(f, xhat, p, o.n, o.cde_samples, g.threads);
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        metrics.push_back(r);
    };

    sw.stage("train");
    if (o.metrics_every > 0) record_metrics(0, random_filters(k0, o.k1, cfg.seed), params);
    const TrainResult result = run_training(xhat, cfg, params, [&](const TrainState& s, const FilterBank& f,
                                                                   const TuningParams& p) {
        if (o.metrics_every > 0 && s.epoch % o.metrics_every == 0) record_metrics(s.epoch, f, p);
    });
    if (o.metrics_every > 0 && metrics.back().epoch != result.state.epoch)
        record_metrics(result.state.epoch, result.filters, result.params);
    for (int e : result.state.stall_epochs) out << "step search exhausted at epoch " << e << "\n";

    sw.stage("write");
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    Checkpoint ckpt{result.filters, result.state.epoch, result.params.beta, result.params.bias,
                    result.state.rate_factor};
    save_checkpoint(dir / "checkpoint.pick", ckpt);
    save_whitening(dir / "whitening.piwm", model);
    io::write_file_atomic(dir / "history.csv", history_csv(result.state));
    std::vector<int> zero;
    save_pgm(dir / "filters.pgm", render_filter_grid(model.basis() * result.filters.C, patches.patch_width, &zero));
    if (!zero.empty()) out << "warning: " << zero.size() << " zero filters rendered flat\n";
    manifest.output(dir / "checkpoint.pick");
    manifest.output(dir / "whitening.piwm");
    manifest.output(dir / "history.csv", true);
    manifest.output(dir / "filters.pgm");
    if (!metrics.empty()) {
        io::write_file_atomic(dir / "metrics.csv", metrics_csv(metrics));
        manifest.output(dir / "metrics.csv", true);
        out << "final cfe_bits=" << metrics.back().cfe_bits << " cde_nats=" << metrics.back().cde_nats << "\n";
    }
    manifest["seed"] = o.seed;
    manifest["k0"] = k0;
    manifest["k1"] = o.k1;
    manifest["algorithm"] = to_string(cfg.algorithm);
    manifest["kde"] = {{"bandwidth", kBandwidthRule}, {"bins", KdeOptions{}.bins}, {"margin", KdeOptions{}.margin}};
    manifest["units"] = {{"cfe", "bits"}, {"cde", "nats"}};
    manifest["final_objective"] = result.state.history.back().objective;
    manifest["stall_epochs"] = result.state.stall_epochs;
    manifest.write(dir / "manifest.json", sw.finish());
    out << "epochs=" << result.state.epoch << " objective=" << result.state.history.back().objective << " -> "
        << dir.string() << "\n";
    return 0;
}

int cmd_metrics(const MetricsOpts& o, const json& config, const Global& g, std::ostream& out) {
    require(o.checkpoint, "checkpoint");
    require(o.patches, "patches");
    if (!(o.n >= 1.0)) throw ConfigError("--n must be at least 1");
    const fs::path wpath = o.whitening.empty() ? sibling(o.checkpoint, "whitening.piwm") : fs::path(o.whitening);

    Stopwatch sw;
    Manifest manifest("metrics", config, g.threads);
    sw.stage("load");
    const Checkpoint ckpt = load_checkpoint(o.checkpoint);
    const WhiteningModel model = load_whitening(wpath);
    const Eigen::MatrixXd data = io::load_mat1(o.patches);
    manifest.input(o.checkpoint);
    manifest.input(wpath);
    manifest.input(o.patches);
    if (ckpt.filters.k0() != model.retained_rank)
        throw ShapeError("checkpoint K0=" + std::to_string(ckpt.filters.k0()) + " does not match whitening rank " +
                         std::to_string(model.retained_rank));

    sw.stage("metrics");
    const Eigen::MatrixXd xhat = transform(model, data, WhitenMode::whiten);
    const TuningParams p = params_from_checkpoint(ckpt, 0);
    MetricsReport r;
    r.epoch = ckpt.epoch;
    r.population_n = o.n;
    const Dictionary d{Eigen::MatrixXd(), Eigen::MatrixXd(), model.basis() * ckpt.filters.C};
    const auto t0 = std::chrono::steady_clock::now();
    r.cfe_bits = coefficient_entropy(d, model.basis() * xhat, {}, g.threads);
    r.cde_nats = conditional_entropy(ckpt.filters, xhat, p, o.n, o.cde_samples, g.threads);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string csv = metrics_csv({r});
    out << csv;
    if (!o.out.empty()) {
        sw.stage("write");
        io::write_file_atomic(o.out, csv);
        manifest.output(o.out, true);
        manifest["population_n"] = o.n;
        manifest["kde"] = {{"bandwidth", kBandwidthRule}, {"bins", KdeOptions{}.bins}, {"margin", KdeOptions{}.margin}};
        manifest["units"] = {{"cfe", "bits"}, {"cde", "nats"}};
        manifest.write(o.out + ".manifest.json", sw.finish());
    }
    return 0;
}

int cmd_export(const ExportOpts& o, const json& config, const Global& g, std::ostream& out) {
    require(o.checkpoint, "checkpoint");
    const fs::path wpath = o.whitening.empty() ? sibling(o.checkpoint, "whitening.piwm") : fs::path(o.whitening);
    Stopwatch sw;
    Manifest manifest("export", config, g.threads);
    sw.stage("load");
    const Checkpoint ckpt = load_checkpoint(o.checkpoint);
    const WhiteningModel model = load_whitening(wpath);
    manifest.input(o.checkpoint);
    manifest.input(wpath);
    sw.stage("extract");
    const Dictionary d = extract_bases(model, ckpt.filters, params_from_checkpoint(ckpt, 0));
    sw.stage("write");
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    const int w = patch_width_for(model.dim(), model.patch_width);
    std::vector<int> zero;
    const std::pair<const char*, const Eigen::MatrixXd*> items[] = {
        {"bases", &d.B}, {"weights", &d.W}, {"filters", &d.C_check}};
    for (const auto& [name, m] : items) {
        save_pgm(dir / (std::string(name) + ".pgm"), render_filter_grid(*m, w, &zero));
        manifest.output(dir / (std::string(name) + ".pgm"));
    }
    io::save_mat1(dir / "B.mat1", d.B);
    io::save_mat1(dir / "W.mat1", d.W);
    io::save_mat1(dir / "C_check.mat1", d.C_check);
    io::save_mat1(dir / "C.mat1", ckpt.filters.C);
    for (const char* name : {"B.mat1", "W.mat1", "C_check.mat1", "C.mat1"}) manifest.output(dir / name);
    if (!zero.empty()) out << "warning: " << zero.size() << " zero columns rendered flat\n";
    manifest.write(dir / "manifest.json", sw.finish());
    out << "exported K0=" << ckpt.filters.k0() << " K1=" << ckpt.filters.k1() << " -> " << dir.string() << "\n";
    return 0;
}

int cmd_denoise(const DenoiseOpts& o, const json& config, const Global& g, std::ostream& out) {
    require(o.clean, "clean");
    require(o.noisy, "noisy");
    require(o.out, "out");
    check_epsilon(o.epsilon);
    Stopwatch sw;
    Manifest manifest("denoise", config, g.threads);
    sw.stage("load");
    const ImageGray clean = load_pgm(o.clean);
    const ImageGray noisy = load_pgm(o.noisy);
    manifest.input(o.clean);
    manifest.input(o.noisy);
    ImageGray original;
    if (!o.original.empty()) {
        original = load_pgm(o.original);
        manifest.input(o.original);
    }

    sw.stage("denoise");
    DenoiseOptions d;
    d.patch_width = o.patch_width;
    d.threshold = o.epsilon;
    d.samples = o.samples;
    d.seed = o.seed;
    d.k1 = o.k1;
    d.train.t_max = o.epochs;
    d.train.t0 = o.t0;
    d.train.v1 = o.v1;
    d.train.tau = o.tau;
    d.train.seed = o.seed;
    d.train.threads = g.threads;
    validate(d.train);
    const DenoiseResult r = denoise_image(clean, noisy, d);

    sw.stage("write");
    save_pgm(o.out, r.image);
    manifest.output(o.out);
    json report = {{"k0", r.k0}, {"k1", r.k1}, {"denoised_vs_noisy", image_distance(r.image, noisy)}};
    if (!o.original.empty()) {
        report["noisy_vs_original"] = image_distance(noisy, original);
        report["denoised_vs_original"] = image_distance(r.image, original);
    }
    io::write_file_atomic(o.out + ".report.json", report.dump(2) + "\n");
    manifest.output(o.out + ".report.json");
    manifest["seed"] = o.seed;
    manifest.write(o.out + ".manifest.json", sw.finish());
    out << "K0=" << r.k0 << " K1=" << r.k1;
    for (const auto& [k, v] : report.items())
        if (v.is_number_float()) out << " " << k << "=" << v.get<double>();
    out << " -> " << o.out << "\n";
    return 0;
}

int cmd_replay(const ReplayOpts& o, const Global& g, std::ostream& out, std::ostream& err) {
    require(o.manifest, "manifest");
    json m;
    try {
        const auto bytes = io::read_file(o.manifest);
        m = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw FormatError("'" + o.manifest + "' is not a valid manifest: " + e.what());
    }
    if (!m.contains("command") || !m.contains("config")) throw FormatError("manifest lacks command or config");
    for (const auto& in : m["inputs"]) {
        const std::string path = in["path"];
        if (io::sha256_file(path) != in["sha256"].get<std::string>())
            throw FormatError("input '" + path + "' changed since the recorded run");
    }
    std::vector<std::string> args = config_to_args(m["command"], m["config"]);
    args.insert(args.begin(), {"--threads", std::to_string(g.threads)});
    const int status = run_command(args, out, err);
    if (status != 0 || !o.verify) return status;
    int mismatched = 0;
    for (const auto& rec : m["outputs"]) {
        if (rec["timing"].get<bool>()) continue;
        const std::string path = rec["path"];
        if (io::sha256_file(path) != rec["sha256"].get<std::string>()) {
            out << "differs: " << path << "\n";
            ++mismatched;
        }
    }
    if (mismatched) throw FormatError(std::to_string(mismatched) + " replayed outputs differ from the manifest");
    out << "replay reproduced all recorded outputs\n";
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"hinfomax: infomax filter learning on image patches"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    Global g;
    g.threads = default_threads();
    app.add_option("--threads", g.threads, "worker threads for objective evaluation (default HINFOMAX_THREADS or 1)")
        ->capture_default_str();
    app.add_option("--config", g.config, "flat key=value file; command-line flags take precedence");

    SampleOpts so;
    TrainOpts to;
    MetricsOpts mo;
    ExportOpts eo;
    DenoiseOpts dn;
    ReplayOpts ro;
    Registry rs, rt, rm, re, rd;

    auto* sample = app.add_subcommand("sample", "images -> patch matrix (mat1)");
    sample->add_option("--images", so.images, "PGM or IDX image files")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    rs.record.push_back([&](json& j) { j["images"] = so.images; });
    add(sample, rs, "image-dir", so.image_dir, "directory of .pgm images");
    add(sample, rs, "patch-width", so.patch_width, "patch width w");
    add(sample, rs, "count", so.count, "number of patches");
    add(sample, rs, "seed", so.seed, "sampler seed");
    add(sample, rs, "out", so.out, "output mat1 file");

    auto* train = app.add_subcommand("train", "patch matrix -> checkpoint, history, filter grid");
    add(train, rt, "patches", to.patches, "input mat1 patch matrix");
    add(train, rt, "patch-width", to.patch_width, "patch width (0: infer from K)");
    add(train, rt, "k1", to.k1, "number of filters K1");
    add(train, rt, "epsilon", to.epsilon, "PCA energy threshold in (0, 1]");
    add(train, rt, "epochs", to.epochs, "t_max");
    add(train, rt, "t0", to.t0, "orthonormal-phase length");
    add(train, rt, "v1", to.v1, "initial rate factor");
    add(train, rt, "tau", to.tau, "backtracking factor");
    add(train, rt, "alg", to.alg, "auto, alg1, alg2 or exact")->check(CLI::IsMember({"auto", "alg1", "alg2", "exact"}));
    add(train, rt, "seed", to.seed, "initialization seed");
    add_flag(train, rt, "train-bias", to.train_bias, "also learn the tuning bias");
    add(train, rt, "batch-size", to.batch_size, "mini-batch size (0: full batch)");
    add(train, rt, "metrics-every", to.metrics_every, "metric cadence in epochs (0: off)");
    add(train, rt, "n", to.n, "population size N for the conditional entropy");
    add(train, rt, "cde-samples", to.cde_samples, "samples used for the conditional entropy (0: all)");
    add(train, rt, "out-dir", to.out_dir, "output directory");

    auto* metrics = app.add_subcommand("metrics", "checkpoint + patches -> CFE/CDE CSV");
    add(metrics, rm, "checkpoint", mo.checkpoint, "checkpoint file");
    add(metrics, rm, "whitening", mo.whitening, "whitening model (default: next to the checkpoint)");
    add(metrics, rm, "patches", mo.patches, "mat1 patch matrix");
    add(metrics, rm, "n", mo.n, "population size N");
    add(metrics, rm, "cde-samples", mo.cde_samples, "samples used for the conditional entropy (0: all)");
    add(metrics, rm, "out", mo.out, "CSV output (default: stdout only)");

    auto* exp = app.add_subcommand("export", "checkpoint -> basis/filter grids and raw matrices");
    add(exp, re, "checkpoint", eo.checkpoint, "checkpoint file");
    add(exp, re, "whitening", eo.whitening, "whitening model (default: next to the checkpoint)");
    add(exp, re, "out-dir", eo.out_dir, "output directory");

    auto* denoise = app.add_subcommand("denoise", "clean + noisy image -> denoised PGM and error report");
    add(denoise, rd, "clean", dn.clean, "clean training image (PGM)");
    add(denoise, rd, "noisy", dn.noisy, "noisy image to restore (PGM)");
    add(denoise, rd, "original", dn.original, "noise-free reference for the error report");
    add(denoise, rd, "patch-width", dn.patch_width, "patch width");
    add(denoise, rd, "epsilon", dn.epsilon, "PCA energy threshold");
    add(denoise, rd, "k1", dn.k1, "number of filters (0: K0)");
    add(denoise, rd, "samples", dn.samples, "training patches drawn from the clean image");
    add(denoise, rd, "epochs", dn.epochs, "t_max");
    add(denoise, rd, "t0", dn.t0, "orthonormal-phase length");
    add(denoise, rd, "v1", dn.v1, "initial rate factor");
    add(denoise, rd, "tau", dn.tau, "backtracking factor");
    add(denoise, rd, "seed", dn.seed, "seed");
    add(denoise, rd, "out", dn.out, "output PGM");

    auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay->add_option("--manifest", ro.manifest, "manifest.json from an earlier run");
    replay->add_flag("--verify", ro.verify, "compare non-timing outputs against the recorded digests");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app.parse(reversed);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "hinfomax: " << e.what() << "\n";
            return exit_code(ErrorCategory::usage);
        }
        CLI::App* sub = app.get_subcommands().front();
        if (!g.config.empty()) {
            const auto bytes = io::read_file(g.config);
            apply_config(app, sub, parse_config_text(std::string(bytes.begin(), bytes.end())));
        }
        if (g.threads < 1) throw ConfigError("--threads must be at least 1");

        if (sub == sample) return cmd_sample(so, resolved(rs), g, out);
        if (sub == train) return cmd_train(to, resolved(rt), g, out);
        if (sub == metrics) return cmd_metrics(mo, resolved(rm), g, out);
        if (sub == exp) return cmd_export(eo, resolved(re), g, out);
        if (sub == denoise) return cmd_denoise(dn, resolved(rd), g, out);
        return cmd_replay(ro, g, out, err);
    } catch (const Error& e) {
        err << "hinfomax: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const fs::filesystem_error& e) {
        err << "hinfomax: " << e.what() << "\n";
        return exit_code(ErrorCategory::data);
    } catch (const CLI::Error& e) {
        err << "hinfomax: " << e.what() << "\n";
        return exit_code(ErrorCategory::usage);
    } catch (const std::exception& e) {
        err << "hinfomax: internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace hinfomax
