// Acceptance gate: one numbered criterion per invocation, one PASS/FAIL line
// on stdout. Exit codes: 0 pass, 1 fail, 77 skipped (missing external data).
//
// Criteria 7 and 8 need the CIFAR-10 binary batches; point ANISO_CIFAR10_DIR
// at the directory containing data_batch_*.bin (default
// data/cifar-10-batches-bin) or the runs are skipped.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "aniso/datagen.hpp"
#include "aniso/diagnostics.hpp"
#include "aniso/experiment.hpp"
#include "aniso/nad.hpp"
#include "aniso/rng.hpp"
#include "aniso/training.hpp"
#include "helpers.hpp"

using namespace aniso;

namespace {

constexpr int kSkip = 77;

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

// ---------- shared pieces ----------

std::vector<double> random_unit(int d, Rng& rng) {
    std::vector<double> v(static_cast<size_t>(d));
    double norm = 0;
    for (auto& x : v) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

LinSepSpec linsep(std::vector<double> v, double eps, double sigma, int n_train, int n_test, int h, int w,
                  uint64_t seed) {
    LinSepSpec s;
    s.v = std::move(v);
    s.epsilon = eps;
    s.sigma = sigma;
    s.n_train = n_train;
    s.n_test = n_test;
    s.height = h;
    s.width = w;
    s.seed = seed;
    return s;
}

NadBasis nad_basis_for(const ModelSpec& spec, uint64_t seed) {
    NadEstimationConfig cfg;
    cfg.seed = seed;
    return eigendecompose(estimate_covariance(spec, cfg));
}

// mean test accuracies of a 2-channel run over seeds
struct MeanAblation {
    double both = 0, b1 = 0, b2 = 0;
};

MeanAblation train_two_channel(const ModelSpec& spec, const std::vector<double>& v1,
                               const std::vector<double>& v2, double eps1, double eps2, double sigma,
                               int n, int h, int w, const TrainConfig& base_cfg, int seeds,
                               uint64_t master) {
    MeanAblation m;
    for (int s = 0; s < seeds; ++s) {
        const auto su = static_cast<uint64_t>(s);
        auto d1 = sample_linsep(linsep(v1, eps1, sigma, n, n, h, w, Rng::derive(master, "d1", {su})));
        auto d2 = sample_linsep(linsep(v2, eps2, sigma, n, n, h, w, Rng::derive(master, "d2", {su})));
        auto train_ds = concat_channels(d1.train, d2.train, Rng::derive(master, "pt", {su}));
        auto test_ds = concat_channels(d1.test, d2.test, Rng::derive(master, "pe", {su}));
        auto params = build(spec, InitScheme{.seed = Rng::derive(master, "init", {su})});
        TrainConfig cfg = base_cfg;
        cfg.shuffle_seed = Rng::derive(master, "shuffle", {su});
        train(spec, params, train_ds, cfg);
        auto ab = ablation_eval(spec, params, test_ds, {0}, {1});
        m.both += ab.acc_both;
        m.b1 += ab.acc_block1;
        m.b2 += ab.acc_block2;
    }
    m.both /= seeds;
    m.b1 /= seeds;
    m.b2 /= seeds;
    return m;
}

std::string cifar_dir() {
    const char* env = std::getenv("ANISO_CIFAR10_DIR");
    return env ? env : "data/cifar-10-batches-bin";
}

bool cifar_present() { return std::filesystem::exists(std::filesystem::path(cifar_dir()) / "data_batch_1.bin"); }

// §4-style run: binarized CIFAR subset ⊕ D(v); returns (cifar-only, synth-only)
// mean ablation accuracies over seeds.
std::pair<double, double> cifar_synth_run(const ModelSpec& spec, const NadBasis& basis, int nad_index,
                                          double sigma, const TrainConfig& base_cfg, int seeds,
                                          uint64_t master) {
    auto cifar = load_cifar10(cifar_dir());
    binarize_labels(cifar.train);
    binarize_labels(cifar.test);
    Dataset ctrain = balanced_subset(cifar.train, 10000, Rng::derive(master, "subset"));
    Dataset ctest = cifar.test;
    const NormStats stats = train_norm_stats(ctrain);
    standardize(ctrain, stats);
    standardize(ctest, stats);

    const auto v = nad_vector(basis, nad_index);
    double acc_cifar = 0, acc_synth = 0;
    for (int s = 0; s < seeds; ++s) {
        const auto su = static_cast<uint64_t>(s), ku = static_cast<uint64_t>(nad_index);
        auto synth = sample_linsep(linsep(v, 1.0, sigma, ctrain.n(), ctest.n(), 32, 32,
                                          Rng::derive(master, "synth", {ku, su})));
        auto train_ds = concat_channels(ctrain, synth.train, Rng::derive(master, "pt", {ku, su}));
        auto test_ds = concat_channels(ctest, synth.test, Rng::derive(master, "pe", {ku, su}));
        auto params = build(spec, InitScheme{.seed = Rng::derive(master, "init", {ku, su})});
        TrainConfig cfg = base_cfg;
        cfg.shuffle_seed = Rng::derive(master, "shuffle", {ku, su});
        train(spec, params, train_ds, cfg);
        auto ab = ablation_eval(spec, params, test_ds, {0, 1, 2}, {3});
        acc_cifar += ab.acc_block1;
        acc_synth += ab.acc_block2;
    }
    return {acc_cifar / seeds, acc_synth / seeds};
}

// ---------- criteria ----------

Outcome criterion_1() {
    Rng rng(10001);
    double worst = 0;

    // per-op coordinate-wise FD through tiny graphs, 100 random points each
    auto check_op = [&](auto&& record, std::vector<std::vector<int>> shapes) {
        for (int p = 0; p < 100; ++p) {
            std::vector<TensorD> leaves;
            for (const auto& sh : shapes) leaves.push_back(testutil::random_tensor(sh, rng));
            auto f = [&](const std::vector<TensorD>& ls) {
                Tape<double> tape;
                std::vector<int> ids;
                for (const auto& l : ls) ids.push_back(tape.leaf(l));
                return tape.value(record(tape, ids))[0];
            };
            Tape<double> tape;
            std::vector<int> ids;
            for (const auto& l : leaves) ids.push_back(tape.leaf(l));
            int out = record(tape, ids);
            auto grads = tape.backward(out);
            std::vector<TensorD> analytic;
            for (int id : ids) analytic.push_back(grads[static_cast<size_t>(id)]);
            worst = std::max(worst, testutil::fd_check(f, leaves, analytic));
        }
    };
    auto weighted_sum = [](Tape<double>& t, int node) {
        const TensorD& v = t.value(node);
        auto w = TensorD::zeros({1, static_cast<int>(v.size())});
        for (int64_t i = 0; i < v.size(); ++i) w[i] = 0.01 * static_cast<double>((i % 7) + 1);
        return t.affine(t.flatten(node), t.leaf(std::move(w)), t.leaf(TensorD::zeros({1})));
    };

    check_op([&](Tape<double>& t, const std::vector<int>& v) { return weighted_sum(t, t.affine(v[0], v[1], v[2])); },
             {{5}, {3, 5}, {3}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) {
        return weighted_sum(t, t.conv2d(v[0], v[1], v[2], 1, 0));
    }, {{2, 5, 5}, {2, 2, 3, 3}, {2}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) {
        return weighted_sum(t, t.conv2d(v[0], v[1], v[2], 2, 1));
    }, {{2, 5, 5}, {2, 2, 3, 3}, {2}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) { return weighted_sum(t, t.relu(v[0])); }, {{9}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) { return weighted_sum(t, t.maxpool2(v[0])); },
             {{2, 4, 4}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) { return weighted_sum(t, t.avgpool2(v[0])); },
             {{2, 4, 4}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) { return weighted_sum(t, t.global_avgpool(v[0])); },
             {{3, 4, 4}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) { return weighted_sum(t, t.concat_c(v[0], v[1])); },
             {{1, 3, 3}, {2, 3, 3}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) {
        return weighted_sum(t, t.flatten(t.add(v[0], v[1])));
    }, {{2, 3, 3}, {2, 3, 3}});
    check_op([&](Tape<double>& t, const std::vector<int>& v) {
        return t.logistic_loss(weighted_sum(t, v[0]), 1.0);
    }, {{4}});

    // per-family directional FD over the joint (params, input) space
    for (auto spec : {ModelSpec::make_linear({2, 8, 8}), ModelSpec::make_mlp({2, 8, 8}, {12, 5}),
                      ModelSpec::make_lenet({1, 16, 16}), ModelSpec::make_miniresnet({2, 8, 8})}) {
        for (int p = 0; p < 100; ++p)
            worst = std::max(worst, testutil::directional_fd_check(spec, rng, (p % 2) ? 1 : -1));
    }

    std::ostringstream d;
    d << "worst relative error " << worst << " (tolerance 1e-6)";
    return {worst <= 1e-6, false, d.str()};
}

Outcome criterion_2() {
    Rng rng(10002);
    double worst_rec = 0, worst_orth = 0;
    for (int t = 0; t < 50; ++t) {
        const int d = 20;
        GradientCovariance c;
        c.d = d;
        c.height = 4;
        c.width = 5;
        c.m.assign(static_cast<size_t>(d) * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j <= i; ++j) {
                const double v = rng.normal();
                c.m[static_cast<size_t>(i) * d + j] = c.m[static_cast<size_t>(j) * d + i] = v;
            }
        auto basis = eigendecompose(c);
        double rec_err = 0, norm = 0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double rec = 0;
                for (int k = 0; k < d; ++k)
                    rec += basis.eigenvalues[static_cast<size_t>(k)] *
                           basis.vectors[static_cast<size_t>(k) * d + i] *
                           basis.vectors[static_cast<size_t>(k) * d + j];
                const double diff = rec - c.at(i, j);
                rec_err += diff * diff;
                norm += c.at(i, j) * c.at(i, j);
            }
        worst_rec = std::max(worst_rec, std::sqrt(rec_err / norm));
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) {
                double dot = 0;
                for (int i = 0; i < d; ++i)
                    dot += basis.vectors[static_cast<size_t>(a) * d + i] *
                           basis.vectors[static_cast<size_t>(b) * d + i];
                worst_orth = std::max(worst_orth, std::abs(dot - (a == b ? 1.0 : 0.0)));
            }
    }

    GradientCovariance c2;
    c2.d = 2;
    c2.height = 1;
    c2.width = 2;
    c2.m = {2, 1, 1, 2};
    auto b2 = eigendecompose(c2);
    const double e2 = std::max(std::abs(b2.eigenvalues[0] - 3.0), std::abs(b2.eigenvalues[1] - 1.0));

    std::ostringstream d;
    d << "reconstruction " << worst_rec << ", orthonormality " << worst_orth << ", 2x2 eigenvalue error " << e2;
    return {worst_rec <= 1e-10 && worst_orth <= 1e-10 && e2 <= 1e-12, false, d.str()};
}

Outcome criterion_3() {
    const int h = 16, w = 16, d = h * w;
    Rng rng(10003);
    auto v = random_unit(d, rng);
    auto spec = linsep(v, 1.0, 1.0, 50000, 50000, h, w, 4242);
    auto pair = sample_linsep(spec);

    // u orthogonal to v
    auto u = random_unit(d, rng);
    double dot = 0;
    for (int i = 0; i < d; ++i) dot += u[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
    double norm = 0;
    for (int i = 0; i < d; ++i) {
        u[static_cast<size_t>(i)] -= dot * v[static_cast<size_t>(i)];
        norm += u[static_cast<size_t>(i)] * u[static_cast<size_t>(i)];
    }
    norm = std::sqrt(norm);
    for (auto& x : u) x /= norm;

    double worst_margin = 0, mean = 0, var = 0;
    int64_t n = 0;
    for (const Dataset* ds : {&pair.train, &pair.test}) {
        for (int i = 0; i < ds->n(); ++i) {
            const float* x = ds->image_ptr(i);
            double pv = 0, pu = 0;
            for (int j = 0; j < d; ++j) {
                pv += v[static_cast<size_t>(j)] * x[j];
                pu += u[static_cast<size_t>(j)] * x[j];
            }
            worst_margin = std::max(
                worst_margin, std::abs(pv - spec.epsilon * ds->labels[static_cast<size_t>(i)]));
            mean += pu;
            var += pu * pu;
            ++n;
        }
    }
    mean /= static_cast<double>(n);
    var = var / static_cast<double>(n) - mean * mean;

    std::ostringstream det;
    det << "n = " << n << ", worst margin deviation " << worst_margin << ", off-direction variance " << var;
    return {worst_margin <= 1e-5 && std::abs(var - 1.0) <= 0.05, false, det.str()};
}

Outcome criterion_4() {
    const auto spec = ModelSpec::make_lenet({1, 16, 16});
    NadEstimationConfig cfg;
    cfg.seed = 10004;
    auto cov = estimate_covariance(spec, cfg);
    auto basis = eigendecompose(cov);
    double worst = 0;
    for (int i = 1; i <= cov.d; ++i)
        worst = std::max(worst, std::abs(alignment(cov, nad_vector(basis, i)) -
                                         basis.eigenvalues[static_cast<size_t>(i - 1)]));
    std::ostringstream d;
    d << "d = " << cov.d << ", worst |alpha(NAD i) - lambda_i| = " << worst;
    return {worst <= 1e-9, false, d.str()};
}

Outcome criterion_5() {
    auto basis = nad_basis_for(ModelSpec::make_mlp({1, 16, 16}, {100, 20}), 10005);
    auto m = train_two_channel(ModelSpec::make_mlp({2, 16, 16}, {100, 20}), nad_vector(basis, 1),
                               nad_vector(basis, 2), 1.0, 0.5, 1.0, 4000, 16, 16, preset("s3-mlp-lenet"), 3,
                               555);
    std::ostringstream d;
    d << "mean acc_both " << m.both << ", acc_ch1 " << m.b1 << ", acc_ch2 " << m.b2;
    return {m.both >= 0.99 && (m.b1 - m.b2) >= 0.05, false, d.str()};
}

Outcome criterion_6() {
    const auto spec1 = ModelSpec::make_lenet({1, 16, 16});
    auto basis = nad_basis_for(spec1, 10006);
    TrainConfig cfg = preset("s3-mlp-lenet");
    // epsilon and lr_max picked for a clear separation between the two regimes:
    // at this margin the top NAD trains to ~80% while the bottom stays at chance
    cfg.lr_max = 0.1;
    const double eps = 1.5;

    auto run = [&](int nad_index) {
        const auto v = nad_vector(basis, nad_index);
        double acc = 0;
        for (int s = 0; s < 3; ++s) {
            const auto su = static_cast<uint64_t>(s), ku = static_cast<uint64_t>(nad_index);
            auto pair = sample_linsep(linsep(v, eps, 1.0, 4000, 4000, 16, 16, Rng::derive(666, "d", {ku, su})));
            auto params = build(spec1, InitScheme{.seed = Rng::derive(666, "init", {ku, su})});
            TrainConfig c = cfg;
            c.shuffle_seed = Rng::derive(666, "shuffle", {ku, su});
            train(spec1, params, pair.train, c);
            acc += evaluate_accuracy(spec1, params, pair.test);
        }
        return acc / 3.0;
    };
    const double top = run(1), bottom = run(256);
    std::ostringstream d;
    d << "mean accuracy NAD 1 = " << top << ", NAD 256 = " << bottom;
    return {(top - bottom) >= 0.20, false, d.str()};
}

Outcome criterion_7() {
    if (!cifar_present())
        return {false, true, "CIFAR-10 batches not found under '" + cifar_dir() + "'"};
    auto basis = nad_basis_for(ModelSpec::make_lenet({1, 32, 32}), 10007);
    const auto spec = ModelSpec::make_lenet({4, 32, 32});
    auto [cifar_top, synth_top] = cifar_synth_run(spec, basis, 1, 1.0, preset("s4-lenet"), 3, 777);
    auto [cifar_bot, synth_bot] = cifar_synth_run(spec, basis, 1024, 1.0, preset("s4-lenet"), 3, 778);
    std::ostringstream d;
    d << "NAD 1: cifar " << cifar_top << " vs synth " << synth_top << "; NAD 1024: cifar " << cifar_bot
      << " vs synth " << synth_bot;
    const bool prefers_synth_at_top = (synth_top - cifar_top) >= 0.15;
    const bool prefers_cifar_at_bottom = (cifar_bot - synth_bot) >= 0.15;
    return {prefers_synth_at_top && prefers_cifar_at_bottom, false, d.str()};
}

Outcome criterion_8() {
    if (!cifar_present())
        return {false, true, "CIFAR-10 batches not found under '" + cifar_dir() + "'"};
    auto basis = nad_basis_for(ModelSpec::make_mlp({1, 32, 32}, {200, 50}), 10008);
    const auto spec = ModelSpec::make_mlp({4, 32, 32}, {200, 50});
    auto [cifar_top, synth_top] = cifar_synth_run(spec, basis, 1, 3.0, preset("s4-mlp"), 3, 888);
    auto [cifar_bot, synth_bot] = cifar_synth_run(spec, basis, 1024, 3.0, preset("s4-mlp"), 3, 889);
    std::ostringstream d;
    d << "NAD 1: cifar " << cifar_top << " vs synth " << synth_top << "; NAD 1024: cifar " << cifar_bot
      << " vs synth " << synth_bot;
    return {(synth_top - cifar_top) >= 0.15 && (synth_bot - cifar_bot) >= 0.15, false, d.str()};
}

Outcome criterion_9() {
    // injected linear oracles against the analytic tilt angles
    const int h = 4, w = 4;
    const auto lin = ModelSpec::make_linear({2, h, w});
    PlaneSpec plane;
    plane.u1.assign(32, 0.0);
    plane.u2.assign(32, 0.0);
    plane.u1[0] = 1.0;
    plane.u2[16] = 1.0;
    plane.half_range = 2.5;
    plane.resolution = 201;

    ParamVector p_u1;
    p_u1.data.assign(33, 0.0f);
    p_u1.data[0] = 1.0f;
    const double tilt_u1 = tilt_angle(cross_section(lin, p_u1, plane));

    ParamVector p_diag;
    p_diag.data.assign(33, 0.0f);
    p_diag.data[0] = p_diag.data[16] = static_cast<float>(1.0 / std::sqrt(2.0));
    const double tilt_diag = tilt_angle(cross_section(lin, p_diag, plane));

    const bool oracles_ok = std::abs(tilt_u1 - 90.0) <= 0.5 && std::abs(tilt_diag - 135.0) <= 0.5;

    // trained two-channel MLP: in-plane boundary normal leans along u1
    auto basis = nad_basis_for(ModelSpec::make_mlp({1, 16, 16}, {100, 20}), 10009);
    const auto spec = ModelSpec::make_mlp({2, 16, 16}, {100, 20});
    const auto v1 = nad_vector(basis, 1), v2 = nad_vector(basis, 2);
    auto d1 = sample_linsep(linsep(v1, 1.0, 1.0, 4000, 4000, 16, 16, Rng::derive(999, "d1")));
    auto d2 = sample_linsep(linsep(v2, 0.5, 1.0, 4000, 4000, 16, 16, Rng::derive(999, "d2")));
    auto train_ds = concat_channels(d1.train, d2.train, Rng::derive(999, "pt"));
    auto params = build(spec, InitScheme{.seed = Rng::derive(999, "init")});
    TrainConfig cfg = preset("s3-mlp-lenet");
    cfg.shuffle_seed = Rng::derive(999, "shuffle");
    train(spec, params, train_ds, cfg);

    PlaneSpec mlp_plane;
    mlp_plane.u1.assign(512, 0.0);
    mlp_plane.u2.assign(512, 0.0);
    for (int i = 0; i < 256; ++i) {
        mlp_plane.u1[static_cast<size_t>(i)] = v1[static_cast<size_t>(i)];
        mlp_plane.u2[static_cast<size_t>(256 + i)] = v2[static_cast<size_t>(i)];
    }
    auto n = in_plane_normal(spec, params, mlp_plane);

    std::ostringstream d;
    d << "oracle tilts " << tilt_u1 << " / " << tilt_diag << " deg; trained MLP normal (" << n[0] << ", "
      << n[1] << ")";
    return {oracles_ok && std::abs(n[0]) > std::abs(n[1]), false, d.str()};
}

Outcome criterion_10() {
    testutil::TempDir tmp;
    auto basis_cfg = ExperimentConfig::parse_text(
        "[experiment]\nkind = nads\nout = " + tmp.file("nads") +
        "\nmaster_seed = 3\n[model]\nfamily = mlp\nhidden = 8,4\n[nads]\nn_inits = 16\nn_inputs_per_init = 2\n"
        "[data]\nheight = 6\nwidth = 6\n");
    run_experiment(basis_cfg);

    auto run_with_threads = [&](int threads, const std::string& out) {
#ifdef _OPENMP
        omp_set_num_threads(threads);
#else
        (void)threads;
#endif
        auto cfg = ExperimentConfig::parse_text(
            "[experiment]\nkind = train-linear-linear\nout = " + out +
            "\nseeds = 2\nmaster_seed = 3\n[model]\nfamily = mlp\n[model]\nhidden = 8,4\n[nads]\nbasis = " +
            tmp.file("nads") + "/basis.anisonad\nidx1 = 1,3\nidx2 = 2\n[data]\nheight = 6\nwidth = 6\n"
            "n_train = 96\nn_test = 96\n[train]\npreset = s3-mlp-lenet\nepochs = 3\n");
        run_experiment(cfg);
        std::ifstream is(out + "/ablation.csv", std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    const std::string a = run_with_threads(1, tmp.file("t1"));
    const std::string b = run_with_threads(8, tmp.file("t8"));
    std::ostringstream d;
    d << "grid CSV bytes: " << a.size() << " (1 thread) vs " << b.size() << " (8 threads), "
      << (a == b ? "identical" : "DIFFERENT");
    return {!a.empty() && a == b, false, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <criterion 1..10>\n";
        return 2;
    }
    const int n = std::atoi(argv[1]);
    static const char* kNames[] = {
        "",
        "gradients match 64-bit central finite differences for every op and model family",
        "eigensolver reconstruction, orthonormality, and the 2x2 closed form",
        "synthetic distribution margin and off-direction variance invariants",
        "alignment of each estimated NAD equals its eigenvalue (lenet, d=256)",
        "two-channel MLP: high joint accuracy, first channel dominates ablations",
        "lenet accuracy on D(NAD 1) exceeds D(NAD 256) by 20+ points",
        "lenet on CIFAR+synthetic: channel preference flips between NAD 1 and NAD 1024",
        "MLP on CIFAR+synthetic prefers the synthetic channel at both NAD extremes",
        "boundary tilt: linear oracles within 0.5 deg; trained MLP normal leans on channel 1",
        "grid runs are byte-identical across thread counts",
    };
    if (n < 1 || n > 10) {
        std::cerr << "criterion must be 1..10\n";
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        switch (n) {
            case 1: o = criterion_1(); break;
            case 2: o = criterion_2(); break;
            case 3: o = criterion_3(); break;
            case 4: o = criterion_4(); break;
            case 5: o = criterion_5(); break;
            case 6: o = criterion_6(); break;
            case 7: o = criterion_7(); break;
            case 8: o = criterion_8(); break;
            case 9: o = criterion_9(); break;
            case 10: o = criterion_10(); break;
        }
    } catch (const std::exception& e) {
        o = {false, false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const char* verdict = o.skipped ? "SKIP" : (o.pass ? "PASS" : "FAIL");
    std::cout << "[criterion " << n << "] " << verdict << ": " << kNames[n] << " — " << o.detail << " ("
              << secs << " s)" << std::endl;
    if (o.skipped) return kSkip;
    return o.pass ? 0 : 1;
}
