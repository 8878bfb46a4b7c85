#include "aniso/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "aniso/datagen.hpp"
#include "aniso/diagnostics.hpp"
#include "aniso/rng.hpp"

namespace fs = std::filesystem;

namespace aniso {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': cannot parse '" + item + "' as integer");
        }
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

int parse_int(const std::string& s, const std::string& key) {
    try {
        return std::stoi(trim(s));
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + s + "' as integer");
    }
}

double parse_double(const std::string& s, const std::string& key) {
    try {
        return std::stod(trim(s));
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + s + "' as number");
    }
}

uint64_t parse_u64(const std::string& s, const std::string& key) {
    try {
        return std::stoull(trim(s));
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + s + "' as unsigned integer");
    }
}

bool parse_bool(const std::string& s, const std::string& key) {
    const std::string v = trim(s);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig cfg;
    std::string section;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;

        if (qual == "experiment.kind") cfg.kind = val;
        else if (qual == "experiment.out") cfg.out = val;
        else if (qual == "experiment.seeds") cfg.seeds = parse_int(val, qual);
        else if (qual == "experiment.master_seed") cfg.master_seed = parse_u64(val, qual);
        else if (qual == "experiment.paper_scale") cfg.paper_scale = parse_bool(val, qual);
        else if (qual == "model.family") cfg.family = val;
        else if (qual == "model.hidden") cfg.mlp_hidden = parse_int_list(val, qual);
        else if (qual == "nads.basis") cfg.basis_path = val;
        else if (qual == "nads.n_inits") cfg.n_inits = parse_int(val, qual);
        else if (qual == "nads.n_inputs_per_init") cfg.n_inputs_per_init = parse_int(val, qual);
        else if (qual == "nads.input_law") cfg.input_law = val;
        else if (qual == "nads.idx1") cfg.idx1 = parse_int_list(val, qual);
        else if (qual == "nads.idx2") cfg.idx2 = parse_int_list(val, qual);
        else if (qual == "data.height") cfg.height = parse_int(val, qual);
        else if (qual == "data.width") cfg.width = parse_int(val, qual);
        else if (qual == "data.epsilon1") cfg.epsilon1 = parse_double(val, qual);
        else if (qual == "data.epsilon2") cfg.epsilon2 = parse_double(val, qual);
        else if (qual == "data.sigma") cfg.sigma = parse_double(val, qual);
        else if (qual == "data.n_train") cfg.n_train = parse_int(val, qual);
        else if (qual == "data.n_test") cfg.n_test = parse_int(val, qual);
        else if (qual == "data.cifar_dir") cfg.cifar_dir = val;
        else if (qual == "data.cifar_subset") cfg.cifar_subset = parse_int(val, qual);
        else if (qual == "data.normalize") cfg.normalize = val;
        else if (qual == "train.preset") cfg.train_preset = val;
        else if (qual == "train.epochs") cfg.epochs = parse_int(val, qual);
        else if (qual == "train.batch_size") cfg.batch_size = parse_int(val, qual);
        else if (qual == "train.lr_max") cfg.lr_max = parse_double(val, qual);
        else if (qual == "train.lr_min") cfg.lr_min = parse_double(val, qual);
        else if (qual == "train.momentum") cfg.momentum = parse_double(val, qual);
        else if (qual == "train.weight_decay") cfg.weight_decay = parse_double(val, qual);
        else if (qual == "cross_section.resolution") cfg.resolution = parse_int(val, qual);
        else if (qual == "cross_section.half_range") cfg.half_range = parse_double(val, qual);
        else if (qual == "cross_section.params") cfg.params_path = val;
        else throw ConfigError("unknown config key '" + qual + "'");
    }
    if (cfg.paper_scale) cfg.apply_paper_scale();
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_text(ss.str());
}

void ExperimentConfig::apply_paper_scale() {
    paper_scale = true;
    height = width = 32;
    n_train = n_test = 10000;
}

void ExperimentConfig::validate() const {
    static const std::vector<std::string> kinds{"nads", "synth", "train-linear-linear", "train-cifar-synth",
                                               "cross-section"};
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
        throw ConfigError("experiment.kind must be one of nads/synth/train-linear-linear/"
                          "train-cifar-synth/cross-section, got '" + kind + "'");
    if (seeds < 1) throw ConfigError("experiment.seeds must be >= 1");
    family_from_name(family);  // throws on bad family
    if (input_law != "gaussian" && input_law != "zero")
        throw ConfigError("nads.input_law must be gaussian or zero");
    if (normalize != "standardize" && normalize != "none")
        throw ConfigError("data.normalize must be standardize or none");
    if (idx1.empty() || idx2.empty()) throw ConfigError("NAD index lists must be non-empty");
    if (height < 1 || width < 1 || n_train < 1 || n_test < 1)
        throw ConfigError("data dims and sample counts must be positive");
    if (resolution < 2) throw ConfigError("cross_section.resolution must be >= 2");
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream os;
    os << "[experiment]\n";
    os << "kind = " << kind << "\n";
    os << "out = " << out << "\n";
    os << "seeds = " << seeds << "\n";
    os << "master_seed = " << master_seed << "\n";
    os << "paper_scale = " << (paper_scale ? "true" : "false") << "\n";
    os << "[model]\n";
    os << "family = " << family << "\n";
    os << "hidden = " << join_ints(mlp_hidden) << "\n";
    os << "[nads]\n";
    if (!basis_path.empty()) os << "basis = " << basis_path << "\n";
    os << "n_inits = " << n_inits << "\n";
    os << "n_inputs_per_init = " << n_inputs_per_init << "\n";
    os << "input_law = " << input_law << "\n";
    os << "idx1 = " << join_ints(idx1) << "\n";
    os << "idx2 = " << join_ints(idx2) << "\n";
    os << "[data]\n";
    os << "height = " << height << "\n";
    os << "width = " << width << "\n";
    os << "epsilon1 = " << fmt(epsilon1) << "\n";
    os << "epsilon2 = " << fmt(epsilon2) << "\n";
    os << "sigma = " << fmt(sigma) << "\n";
    os << "n_train = " << n_train << "\n";
    os << "n_test = " << n_test << "\n";
    os << "cifar_dir = " << cifar_dir << "\n";
    os << "cifar_subset = " << cifar_subset << "\n";
    os << "normalize = " << normalize << "\n";
    os << "[train]\n";
    os << "preset = " << train_preset << "\n";
    if (epochs) os << "epochs = " << *epochs << "\n";
    if (batch_size) os << "batch_size = " << *batch_size << "\n";
    if (lr_max) os << "lr_max = " << fmt(*lr_max) << "\n";
    if (lr_min) os << "lr_min = " << fmt(*lr_min) << "\n";
    if (momentum) os << "momentum = " << fmt(*momentum) << "\n";
    if (weight_decay) os << "weight_decay = " << fmt(*weight_decay) << "\n";
    os << "[cross_section]\n";
    os << "resolution = " << resolution << "\n";
    os << "half_range = " << fmt(half_range) << "\n";
    if (!params_path.empty()) os << "params = " << params_path << "\n";
    return os.str();
}

uint64_t ExperimentConfig::digest() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : serialize()) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}

ModelSpec ExperimentConfig::model_spec(int channels) const {
    const std::array<int, 3> in{channels, height, width};
    switch (family_from_name(family)) {
        case Family::linear: return ModelSpec::make_linear(in);
        case Family::mlp: return ModelSpec::make_mlp(in, mlp_hidden);
        case Family::lenet: return ModelSpec::make_lenet(in);
        case Family::miniresnet: return ModelSpec::make_miniresnet(in);
    }
    throw std::logic_error("unreachable");
}

TrainConfig ExperimentConfig::train_config(uint64_t shuffle_seed) const {
    TrainConfig c = preset(train_preset);
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (lr_max) c.lr_max = *lr_max;
    if (lr_min) c.lr_min = *lr_min;
    if (momentum) c.momentum = *momentum;
    if (weight_decay) c.weight_decay = *weight_decay;
    c.shuffle_seed = shuffle_seed;
    c.validate();
    return c;
}

double ExperimentConfig::cross_section_half_range() const {
    return half_range > 0 ? half_range : 2.5 * std::max(epsilon1, epsilon2);
}

uint64_t file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "' for digest");
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        const std::streamsize n = is.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<uint64_t>(static_cast<unsigned char>(buf[i]));
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

namespace {

std::string hex64(uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// Accumulates output files and writes the run manifest last.
struct Manifest {
    const ExperimentConfig& cfg;
    std::vector<std::pair<std::string, uint64_t>> inputs;
    std::vector<std::string> outputs;

    explicit Manifest(const ExperimentConfig& c) : cfg(c) { fs::create_directories(cfg.out); }

    void input(const std::string& path) { inputs.emplace_back(path, file_digest(path)); }
    std::string out_path(const std::string& name) const { return (fs::path(cfg.out) / name).string(); }
    void output(const std::string& path) { outputs.push_back(path); }

    std::vector<std::string> finish() {
        // config echo for reproduction; written first so the manifest covers it
        const std::string cpath = out_path("config.echo.txt");
        {
            std::ofstream cs(cpath);
            cs << cfg.serialize();
        }
        outputs.push_back(cpath);

        const std::string mpath = out_path("manifest.txt");
        std::ofstream os(mpath);
        os << "toolkit_version = " << kToolkitVersion << "\n";
        os << "config_digest = " << hex64(cfg.digest()) << "\n";
        os << "kind = " << cfg.kind << "\n";
        os << "seeds = " << cfg.seeds << "\n";
        for (size_t i = 0; i < inputs.size(); ++i) {
            os << "input." << i << ".path = " << inputs[i].first << "\n";
            os << "input." << i << ".digest = " << hex64(inputs[i].second) << "\n";
        }
        std::vector<std::string> sorted = outputs;
        std::sort(sorted.begin(), sorted.end());
        for (size_t i = 0; i < sorted.size(); ++i) {
            os << "output." << i << ".path = " << sorted[i] << "\n";
            os << "output." << i << ".digest = " << hex64(file_digest(sorted[i])) << "\n";
        }
        os.close();
        auto all = sorted;
        all.push_back(mpath);
        return all;
    }
};

NadBasis load_checked_basis(const ExperimentConfig& cfg, Manifest& m) {
    if (cfg.basis_path.empty()) throw ConfigError("nads.basis is required for kind '" + cfg.kind + "'");
    NadBasis basis = load_basis(cfg.basis_path);
    if (basis.height != cfg.height || basis.width != cfg.width)
        throw ConfigError("NAD basis spatial dims " + std::to_string(basis.height) + "x" +
                          std::to_string(basis.width) + " do not match config " + std::to_string(cfg.height) +
                          "x" + std::to_string(cfg.width));
    if (basis.model_hash != cfg.model_spec(1).hash())
        throw ConfigError("NAD basis was estimated for a different model spec");
    for (int i : cfg.idx1)
        if (i < 1 || i > basis.d) throw ConfigError("nads.idx1 index " + std::to_string(i) + " out of range");
    for (int i : cfg.idx2)
        if (i < 1 || i > basis.d) throw ConfigError("nads.idx2 index " + std::to_string(i) + " out of range");
    m.input(cfg.basis_path);
    return basis;
}

LinSepSpec linsep_spec(const ExperimentConfig& cfg, std::vector<double> v, double epsilon, int n_train,
                       int n_test, uint64_t seed) {
    LinSepSpec s;
    s.v = std::move(v);
    s.epsilon = epsilon;
    s.sigma = cfg.sigma;
    s.n_train = n_train;
    s.n_test = n_test;
    s.height = cfg.height;
    s.width = cfg.width;
    s.seed = seed;
    return s;
}

struct GridRow {
    std::string run_id;
    int i = 0, j = 0;
    std::string seed;  // index or "mean"
    std::string status;
    double acc_both = 0, acc_b1 = 0, acc_b2 = 0;
};

void write_grid_csv(const std::string& path, const std::vector<GridRow>& rows) {
    std::ofstream os(path);
    os << "run_id,nad_idx_1,nad_idx_2,seed,acc_both,acc_b1,acc_b2,status\n";
    for (const auto& r : rows) {
        os << r.run_id << "," << r.i << "," << r.j << "," << r.seed << ",";
        if (r.status == "diverged")
            os << "nan,nan,nan";
        else
            os << fmt(r.acc_both) << "," << fmt(r.acc_b1) << "," << fmt(r.acc_b2);
        os << "," << r.status << "\n";
    }
}

}  // namespace

std::vector<std::string> run_nads(const ExperimentConfig& cfg) {
    Manifest m(cfg);
    NadEstimationConfig est;
    est.n_inits = cfg.n_inits;
    est.n_inputs_per_init = cfg.n_inputs_per_init;
    est.input_law = cfg.input_law == "zero" ? NadEstimationConfig::InputLaw::zero
                                            : NadEstimationConfig::InputLaw::gaussian;
    est.seed = cfg.master_seed;
    const ModelSpec spec = cfg.model_spec(1);
    const GradientCovariance cov = estimate_covariance(spec, est);
    const NadBasis basis = eigendecompose(cov);

    const std::string bpath = m.out_path("basis.anisonad");
    save_basis(bpath, basis);
    m.output(bpath);

    const std::string epath = m.out_path("eigenvalues.csv");
    {
        std::ofstream os(epath);
        os << "index,eigenvalue\n";
        for (int k = 0; k < basis.d; ++k) os << (k + 1) << "," << fmt(basis.eigenvalues[static_cast<size_t>(k)]) << "\n";
    }
    m.output(epath);
    return m.finish();
}

std::vector<std::string> run_synth(const ExperimentConfig& cfg) {
    Manifest m(cfg);
    const NadBasis basis = load_checked_basis(cfg, m);
    const int idx = cfg.idx1.front();
    auto pair = sample_linsep(linsep_spec(cfg, nad_vector(basis, idx), cfg.epsilon1, cfg.n_train, cfg.n_test,
                                          Rng::derive(cfg.master_seed, "synth", {static_cast<uint64_t>(idx)})));
    const std::string tr = m.out_path("train.anisodat");
    const std::string te = m.out_path("test.anisodat");
    save_dataset(tr, pair.train);
    save_dataset(te, pair.test);
    m.output(tr);
    m.output(te);
    m.output(tr + ".prov.txt");
    m.output(te + ".prov.txt");
    return m.finish();
}

namespace {

GridRow run_linear_linear_point(const ExperimentConfig& cfg, const NadBasis& basis, int i, int j, int s) {
    GridRow row;
    row.i = i;
    row.j = j;
    row.seed = std::to_string(s);
    row.run_id = "i" + std::to_string(i) + "-j" + std::to_string(j) + "-s" + std::to_string(s);
    const auto iu = static_cast<uint64_t>(i), ju = static_cast<uint64_t>(j), su = static_cast<uint64_t>(s);

    auto d1 = sample_linsep(linsep_spec(cfg, nad_vector(basis, i), cfg.epsilon1, cfg.n_train, cfg.n_test,
                                        Rng::derive(cfg.master_seed, "data-ch1", {iu, ju, su})));
    auto d2 = sample_linsep(linsep_spec(cfg, nad_vector(basis, j), cfg.epsilon2, cfg.n_train, cfg.n_test,
                                        Rng::derive(cfg.master_seed, "data-ch2", {iu, ju, su})));
    Dataset train_ds = concat_channels(d1.train, d2.train, Rng::derive(cfg.master_seed, "pair-train", {iu, ju, su}));
    Dataset test_ds = concat_channels(d1.test, d2.test, Rng::derive(cfg.master_seed, "pair-test", {iu, ju, su}));

    const ModelSpec spec = cfg.model_spec(2);
    ParamVector params = build(spec, InitScheme{.seed = Rng::derive(cfg.master_seed, "init", {iu, ju, su})});
    try {
        train(spec, params, train_ds, cfg.train_config(Rng::derive(cfg.master_seed, "shuffle", {iu, ju, su})));
        auto ab = ablation_eval(spec, params, test_ds, {0}, {1});
        row.acc_both = ab.acc_both;
        row.acc_b1 = ab.acc_block1;
        row.acc_b2 = ab.acc_block2;
        row.status = "ok";
    } catch (const DivergenceError&) {
        row.status = "diverged";
    }
    return row;
}

void append_mean_rows(std::vector<GridRow>& rows, const std::vector<GridRow>& per_seed) {
    // group by (i, j), average ok seeds
    std::map<std::pair<int, int>, std::vector<const GridRow*>> groups;
    for (const auto& r : per_seed) groups[{r.i, r.j}].push_back(&r);
    for (auto& [key, g] : groups) {
        GridRow mean;
        mean.i = key.first;
        mean.j = key.second;
        mean.seed = "mean";
        mean.run_id = "i" + std::to_string(mean.i) + "-j" + std::to_string(mean.j) + "-mean";
        int n = 0;
        for (const GridRow* r : g) {
            if (r->status != "ok") continue;
            mean.acc_both += r->acc_both;
            mean.acc_b1 += r->acc_b1;
            mean.acc_b2 += r->acc_b2;
            ++n;
        }
        if (n == 0) {
            mean.status = "diverged";
        } else {
            mean.acc_both /= n;
            mean.acc_b1 /= n;
            mean.acc_b2 /= n;
            mean.status = "ok";
        }
        rows.push_back(mean);
    }
}

}  // namespace

std::vector<std::string> run_grid(const ExperimentConfig& cfg) {
    Manifest m(cfg);
    const NadBasis basis = load_checked_basis(cfg, m);
    std::vector<GridRow> rows;

    if (cfg.kind == "train-linear-linear") {
        for (int i : cfg.idx1)
            for (int j : cfg.idx2)
                for (int s = 0; s < cfg.seeds; ++s)
                    rows.push_back(run_linear_linear_point(cfg, basis, i, j, s));
    } else if (cfg.kind == "train-cifar-synth") {
        auto cifar = load_cifar10(cfg.cifar_dir);
        binarize_labels(cifar.train);
        binarize_labels(cifar.test);
        Dataset ctrain = balanced_subset(cifar.train, cfg.cifar_subset,
                                         Rng::derive(cfg.master_seed, "cifar-subset"));
        Dataset ctest = cifar.test;
        if (cfg.normalize == "standardize") {
            const NormStats stats = train_norm_stats(ctrain);
            standardize(ctrain, stats);
            standardize(ctest, stats);
        }
        const ModelSpec spec = cfg.model_spec(4);
        for (int k : cfg.idx1) {
            for (int s = 0; s < cfg.seeds; ++s) {
                const auto ku = static_cast<uint64_t>(k), su = static_cast<uint64_t>(s);
                GridRow row;
                row.i = k;
                row.j = 0;
                row.seed = std::to_string(s);
                row.run_id = "k" + std::to_string(k) + "-s" + std::to_string(s);
                auto synth = sample_linsep(linsep_spec(cfg, nad_vector(basis, k), cfg.epsilon1, ctrain.n(),
                                                       ctest.n(), Rng::derive(cfg.master_seed, "synth", {ku, su})));
                Dataset train_ds =
                    concat_channels(ctrain, synth.train, Rng::derive(cfg.master_seed, "pair-train", {ku, su}));
                Dataset test_ds =
                    concat_channels(ctest, synth.test, Rng::derive(cfg.master_seed, "pair-test", {ku, su}));
                ParamVector params = build(spec, InitScheme{.seed = Rng::derive(cfg.master_seed, "init", {ku, su})});
                try {
                    train(spec, params, train_ds, cfg.train_config(Rng::derive(cfg.master_seed, "shuffle", {ku, su})));
                    auto ab = ablation_eval(spec, params, test_ds, {0, 1, 2}, {3});
                    row.acc_both = ab.acc_both;
                    row.acc_b1 = ab.acc_block1;
                    row.acc_b2 = ab.acc_block2;
                    row.status = "ok";
                } catch (const DivergenceError&) {
                    row.status = "diverged";
                }
                rows.push_back(row);
            }
        }
    } else {
        throw ConfigError("run_grid: kind must be train-linear-linear or train-cifar-synth");
    }

    std::vector<GridRow> all = rows;
    append_mean_rows(all, rows);
    const std::string cpath = m.out_path("ablation.csv");
    write_grid_csv(cpath, all);
    m.output(cpath);
    return m.finish();
}

std::vector<std::string> run_cross_section(const ExperimentConfig& cfg) {
    Manifest m(cfg);
    const NadBasis basis = load_checked_basis(cfg, m);
    const int i = cfg.idx1.front(), j = cfg.idx2.front();
    const auto v1 = nad_vector(basis, i);
    const auto v2 = nad_vector(basis, j);
    const int d = basis.d;

    PlaneSpec plane;
    plane.u1.assign(static_cast<size_t>(2) * d, 0.0);
    plane.u2.assign(static_cast<size_t>(2) * d, 0.0);
    for (int k = 0; k < d; ++k) {
        plane.u1[static_cast<size_t>(k)] = v1[static_cast<size_t>(k)];
        plane.u2[static_cast<size_t>(d + k)] = v2[static_cast<size_t>(k)];
    }
    plane.half_range = cfg.cross_section_half_range();
    plane.resolution = cfg.resolution;

    const ModelSpec spec = cfg.model_spec(2);
    const std::string spath = m.out_path("tilt_summary.csv");
    std::ofstream summary(spath);
    summary << "run_id,nad_idx_1,nad_idx_2,seed,tilt_deg,n1,n2,n1_gt_n2\n";

    const int n_runs = cfg.params_path.empty() ? cfg.seeds : 1;
    for (int s = 0; s < n_runs; ++s) {
        ParamVector params;
        std::string run_id = "i" + std::to_string(i) + "-j" + std::to_string(j) + "-s" + std::to_string(s);
        if (!cfg.params_path.empty()) {
            params = load_params(cfg.params_path, spec);
            m.input(cfg.params_path);
            run_id = "i" + std::to_string(i) + "-j" + std::to_string(j) + "-injected";
        } else {
            const auto iu = static_cast<uint64_t>(i), ju = static_cast<uint64_t>(j),
                       su = static_cast<uint64_t>(s);
            auto d1 = sample_linsep(linsep_spec(cfg, v1, cfg.epsilon1, cfg.n_train, cfg.n_test,
                                                Rng::derive(cfg.master_seed, "data-ch1", {iu, ju, su})));
            auto d2 = sample_linsep(linsep_spec(cfg, v2, cfg.epsilon2, cfg.n_train, cfg.n_test,
                                                Rng::derive(cfg.master_seed, "data-ch2", {iu, ju, su})));
            Dataset train_ds =
                concat_channels(d1.train, d2.train, Rng::derive(cfg.master_seed, "pair-train", {iu, ju, su}));
            params = build(spec, InitScheme{.seed = Rng::derive(cfg.master_seed, "init", {iu, ju, su})});
            train(spec, params, train_ds,
                  cfg.train_config(Rng::derive(cfg.master_seed, "shuffle", {iu, ju, su})));
        }

        const CrossSection cs = cross_section(spec, params, plane);
        const std::string csv = m.out_path(run_id + ".cross_section.csv");
        const std::string pgm = m.out_path(run_id + ".sign.pgm");
        write_cross_section_csv(csv, cs);
        write_sign_pgm(pgm, cs);
        m.output(csv);
        m.output(pgm);

        const auto normal = in_plane_normal(spec, params, plane);
        summary << run_id << "," << i << "," << j << "," << (cfg.params_path.empty() ? std::to_string(s) : "-")
                << "," << fmt(tilt_angle(cs)) << "," << fmt(normal[0]) << "," << fmt(normal[1]) << ","
                << (std::abs(normal[0]) > std::abs(normal[1]) ? "true" : "false") << "\n";
    }
    summary.close();
    m.output(spath);
    return m.finish();
}

std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind == "nads") return run_nads(cfg);
    if (cfg.kind == "synth") return run_synth(cfg);
    if (cfg.kind == "train-linear-linear" || cfg.kind == "train-cifar-synth") return run_grid(cfg);
    if (cfg.kind == "cross-section") return run_cross_section(cfg);
    throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
}

std::string run_report(const std::string& out_dir) {
    const fs::path dir(out_dir);
    const fs::path manifest = dir / "manifest.txt";
    if (!fs::exists(manifest)) throw std::runtime_error("no manifest.txt under '" + out_dir + "'");
    std::ostringstream os;
    os << "run directory: " << out_dir << "\n";
    {
        std::ifstream is(manifest);
        os << is.rdbuf();
    }
    const fs::path ablation = dir / "ablation.csv";
    if (fs::exists(ablation)) {
        std::ifstream is(ablation);
        std::string line;
        std::getline(is, line);  // header
        os << "\nseed-averaged ablation rows:\n";
        while (std::getline(is, line))
            if (line.find(",mean,") != std::string::npos) os << "  " << line << "\n";
    }
    const fs::path tilt = dir / "tilt_summary.csv";
    if (fs::exists(tilt)) {
        std::ifstream is(tilt);
        os << "\ntilt summary:\n" << is.rdbuf();
    }
    return os.str();
}

}  // namespace aniso
