#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hinfomax/errors.hpp"
#include "hinfomax/io.hpp"
#include "hinfomax/train.hpp"
#include "hinfomax/whiten.hpp"
#include "support.hpp"

using namespace hinfomax;
using testsupport::numeric_gradient;
using testsupport::random_matrix;
using testsupport::random_orthonormal_rows;
using testsupport::relative_error;

namespace {

TuningParams random_params(Rng& rng, int k0, int k1) {
    TuningParams p = init_tuning(k0, k1);
    p.beta = rng.uniform(0.5, 2.5) * p.scale;
    p.bias = rng.uniform(-0.5, 0.5);
    return p;
}

double gradient_error(Objective obj, const Eigen::MatrixXd& C, const Eigen::MatrixXd& X, const TuningParams& p) {
    const auto r = evaluate_objective(obj, {C}, X, p, true);
    const auto fd = numeric_gradient(
        [&](const Eigen::MatrixXd& c) { return evaluate_objective(obj, {c}, X, p, false).value; }, C);
    return relative_error(r.gradient, fd);
}

double logdet(const Eigen::MatrixXd& m) { return 2.0 * Eigen::LLT<Eigen::MatrixXd>(m).matrixLLT().diagonal().array().log().sum(); }

// Whitened mixture of Laplacian sources plus the composite-unmixing pieces.
struct IcaProblem {
    testsupport::Mixture mix;
    WhiteningModel model;
    Eigen::MatrixXd xhat;
};

IcaProblem ica_problem(std::uint64_t seed, int n, Eigen::Index m) {
    IcaProblem p;
    p.mix = testsupport::laplace_mixture(seed, n, m);
    PatchMatrix pm;
    pm.data = p.mix.X;
    p.model = fit_whitening(pm, 1.0);
    p.xhat = transform(p.model, pm.data, WhitenMode::whiten);
    return p;
}

double composite_amari(const IcaProblem& p, const Eigen::MatrixXd& C) {
    const Eigen::MatrixXd G = C.transpose() * p.model.variances().cwiseSqrt().cwiseInverse().asDiagonal() *
                              p.model.basis().transpose() * p.mix.A;
    return testsupport::amari_index(G);
}

}  // namespace

TEST_CASE("q1 reduces to the definition for C = I and one sample") {
    Rng rng(1);
    const auto p = random_params(rng, 3, 3);
    const Eigen::MatrixXd x = random_matrix(rng, 3, 1);
    double expect = 0.0;
    for (int k = 0; k < 3; ++k) expect -= std::log(tuning_phi(p, x(k, 0)));
    CHECK(evaluate_objective(Objective::q1, {Eigen::MatrixXd::Identity(3, 3)}, x, p, false).value ==
          doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("q1 is invariant to column permutations of C") {
    Rng rng(2);
    const auto p = random_params(rng, 4, 4);
    const Eigen::MatrixXd X = random_matrix(rng, 4, 30);
    const Eigen::MatrixXd C = random_matrix(rng, 4, 4);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
    perm.indices() << 2, 0, 3, 1;
    const double a = evaluate_objective(Objective::q1, {C}, X, p, false).value;
    const double b = evaluate_objective(Objective::q1, {C * perm}, X, p, false).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
}

TEST_CASE("analytic gradients match central differences") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd X3 = random_matrix(rng, 3, 10);
        const auto p3 = random_params(rng, 3, 3);
        CHECK(gradient_error(Objective::q1, random_matrix(rng, 3, 3), X3, p3) < 1e-5);
        CHECK(gradient_error(Objective::q2, random_matrix(rng, 3, 3), X3, p3) < 1e-5);

        const Eigen::MatrixXd X2 = random_matrix(rng, 2, 20);
        const auto p24 = random_params(rng, 2, 4);
        CHECK(gradient_error(Objective::qhat, random_matrix(rng, 2, 4), X2, p24) < 1e-4);

        const auto p23 = random_params(rng, 2, 3);
        CHECK(gradient_error(Objective::exact, random_matrix(rng, 2, 3), X2.leftCols(5), p23) < 1e-5);
    }
}

TEST_CASE("wrapper functions match evaluate_objective") {
    Rng rng(4);
    const Eigen::MatrixXd X = random_matrix(rng, 2, 15);
    const auto p = random_params(rng, 2, 2);
    const FilterBank f{random_matrix(rng, 2, 2)};
    CHECK(objective_grad_alg1(f, X, p).value == evaluate_objective(Objective::q1, f, X, p, true).value);
    CHECK(objective_grad_q2(f, X, p).gradient == evaluate_objective(Objective::q2, f, X, p, true).gradient);
    CHECK(objective_grad_alg2(f, X, p).value == evaluate_objective(Objective::qhat, f, X, p, true).value);
    CHECK(objective_grad_exact(f, X, p).value == evaluate_objective(Objective::exact, f, X, p, true).value);
}

TEST_CASE("q2 identities") {
    Rng rng(5);
    const Eigen::MatrixXd X = random_matrix(rng, 4, 40);
    const auto p = random_params(rng, 4, 4);
    const Eigen::MatrixXd Q = random_orthonormal_rows(rng, 4, 4);
    const double q1 = evaluate_objective(Objective::q1, {Q}, X, p, false).value;
    CHECK(std::abs(evaluate_objective(Objective::q2, {Q}, X, p, false).value - q1) < 1e-10);

    // Isolated log-det term: scaling C by s adds -K1 ln s.
    const Eigen::MatrixXd C = random_matrix(rng, 4, 4);
    const double s = 1.7;
    auto logdet_term = [&](const Eigen::MatrixXd& c) {
        return evaluate_objective(Objective::q2, {c}, X, p, false).value -
               evaluate_objective(Objective::q1, {c}, X, p, false).value;
    };
    CHECK(logdet_term(s * C) - logdet_term(C) == doctest::Approx(-4.0 * std::log(s)).epsilon(1e-10));

    Eigen::MatrixXd singular = C;
    singular.col(3) = singular.col(0);
    CHECK_THROWS_AS(evaluate_objective(Objective::q2, {singular}, X, p, false), ConditioningError);
}

TEST_CASE("qhat identities") {
    Rng rng(6);
    const Eigen::MatrixXd X = random_matrix(rng, 3, 50);
    const auto p = random_params(rng, 3, 3);
    const Eigen::MatrixXd Q = random_orthonormal_rows(rng, 3, 3);
    const Eigen::MatrixXd phi = eval_nonlinearity(p, Q.transpose() * X).phi;
    const double expect = -phi.rowwise().mean().array().log().sum();
    CHECK(evaluate_objective(Objective::qhat, {Q}, X, p, false).value == doctest::Approx(expect).epsilon(1e-12));

    const auto p4 = random_params(rng, 2, 2);
    Eigen::MatrixXd dup = random_matrix(rng, 2, 2);
    dup.col(1) = dup.col(0);
    CHECK_THROWS_AS(evaluate_objective(Objective::qhat, {dup}, X.topRows(2), p4, false), ConditioningError);
}

TEST_CASE("exact objective identities") {
    Rng rng(7);
    const Eigen::MatrixXd X = random_matrix(rng, 3, 25);
    const auto p = random_params(rng, 3, 3);
    const Eigen::MatrixXd Q = random_orthonormal_rows(rng, 3, 3);
    CHECK(std::abs(evaluate_objective(Objective::exact, {Q}, X, p, false).value -
                   evaluate_objective(Objective::q1, {Q}, X, p, false).value) < 1e-10);

    // K0 = 1, M = 1: a scalar log.
    const auto p1 = random_params(rng, 1, 3);
    const Eigen::MatrixXd c = random_matrix(rng, 1, 3);
    const Eigen::MatrixXd x = random_matrix(rng, 1, 1);
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double ph = tuning_phi(p1, c(0, k) * x(0, 0));
        s += c(0, k) * c(0, k) * ph * ph;
    }
    CHECK(evaluate_objective(Objective::exact, {c}, x, p1, false).value == doctest::Approx(-0.5 * std::log(s)).epsilon(1e-12));

    Eigen::MatrixXd dup = random_matrix(rng, 2, 3);
    dup.row(1) = dup.row(0);
    try {
        evaluate_objective(Objective::exact, {dup}, X.topRows(2), random_params(rng, 2, 3), false);
        FAIL("expected a conditioning error");
    } catch (const ConditioningError& e) {
        CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
    }
}

TEST_CASE("objective shape checks") {
    Rng rng(8);
    const Eigen::MatrixXd X = random_matrix(rng, 2, 10);
    const auto p = random_params(rng, 2, 3);
    const FilterBank wide{random_matrix(rng, 2, 3)};
    CHECK_THROWS_AS(evaluate_objective(Objective::q1, wide, X, p, false), ShapeError);
    CHECK_THROWS_AS(evaluate_objective(Objective::q2, wide, X, p, false), ShapeError);
    CHECK_THROWS_AS(evaluate_objective(Objective::qhat, {random_matrix(rng, 3, 2)}, random_matrix(rng, 3, 4), p, false),
                    ShapeError);
    CHECK_THROWS_AS(evaluate_objective(Objective::qhat, wide, random_matrix(rng, 3, 4), p, false), ShapeError);
}

TEST_CASE("saturation guard") {
    auto p = init_tuning(2, 2);
    p.beta = 1.0;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 200);
    const FilterBank I{Eigen::MatrixXd::Identity(2, 2)};
    X(1, 7) = 2000.0;  // one floored entry out of 400: tolerated and counted
    const auto r = evaluate_objective(Objective::q1, I, X, p, true);
    CHECK(r.floored == 1);
    CHECK(std::isfinite(r.value));
    CHECK(r.gradient.allFinite());
    for (int j = 0; j < 10; ++j) X(0, j) = -3000.0;
    try {
        evaluate_objective(Objective::q1, I, X, p, false);
        FAIL("expected saturation");
    } catch (const SaturationError& e) {
        CHECK(std::string(e.what()).find("output 0, sample 0") != std::string::npos);
    }
    CHECK_THROWS_AS(evaluate_objective(Objective::qhat, I, Eigen::MatrixXd::Constant(2, 5, 5000.0), p, false),
                    SaturationError);
}

TEST_CASE("evaluation is bitwise identical across thread counts") {
    Rng rng(9);
    const Eigen::MatrixXd X = random_matrix(rng, 3, 9000);
    const auto p = random_params(rng, 3, 5);
    const FilterBank f{random_matrix(rng, 3, 5)};
    for (Objective obj : {Objective::qhat, Objective::exact}) {
        const auto a = evaluate_objective(obj, f, X, p, true, {1});
        const auto b = evaluate_objective(obj, f, X, p, true, {3});
        CHECK(a.value == b.value);
        CHECK(a.gradient == b.gradient);
    }
    const auto p3 = random_params(rng, 3, 3);
    const FilterBank sq{random_matrix(rng, 3, 3)};
    CHECK(evaluate_objective(Objective::q2, sq, X, p3, true, {1}).gradient ==
          evaluate_objective(Objective::q2, sq, X, p3, true, {4}).gradient);
}

TEST_CASE("stiefel_step") {
    Rng rng(10);
    const Eigen::MatrixXd C = random_orthonormal_rows(rng, 3, 5);
    CHECK(stiefel_step(C, Eigen::MatrixXd::Zero(3, 5), 0.3) == C);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd G = random_matrix(rng, 3, 5);
        const double mu = rng.uniform(1e-4, 1e-2);
        const Eigen::MatrixXd Cp = stiefel_step(C, G, mu);
        CHECK((Cp * Cp.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() <= 10 * mu * mu * G.squaredNorm());
    }
    const Eigen::MatrixXd Q = random_orthonormal_rows(rng, 4, 4);
    CHECK((stiefel_step(Q, Q, 0.5) - Q).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(stiefel_step(C, Eigen::MatrixXd::Zero(2, 5), 0.1), ShapeError);
}

TEST_CASE("gram_schmidt_rows") {
    Eigen::MatrixXd C(2, 2);
    C << 2, 0, 1, 1;
    CHECK((gram_schmidt_rows(C) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

    Rng rng(11);
    const Eigen::MatrixXd Q = random_orthonormal_rows(rng, 3, 6);
    CHECK((gram_schmidt_rows(Q) - Q).cwiseAbs().maxCoeff() < 1e-14);

    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd R = random_matrix(rng, 4, 7);
        const Eigen::MatrixXd O = gram_schmidt_rows(R);
        CHECK((O * O.transpose() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-12);
        CHECK((O.row(0) - R.row(0).normalized()).norm() < 1e-14);
        // Row span preserved: projecting R onto span(O) changes nothing.
        CHECK((R - R * O.transpose() * O).norm() < 1e-10 * R.norm());
    }
    Eigen::MatrixXd dep = random_matrix(rng, 3, 4);
    dep.row(2) = 2 * dep.row(0) - dep.row(1);
    CHECK_THROWS_AS(gram_schmidt_rows(dep), RankError);
}

TEST_CASE("adapt_step") {
    SUBCASE("kappa = 1 gives mu = v") {
        TrainState s;
        s.rate_factor = 0.4;
        const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
        const auto out = adapt_step(s, C, 1.0, C, [](const Eigen::MatrixXd&) { return 0.0; }, 0.8);
        CHECK(s.step == doctest::Approx(0.4));
        CHECK(out.backtracks == 0);
    }
    SUBCASE("quadratic toy objective strictly decreases") {
        Rng rng(12);
        const Eigen::MatrixXd target = random_matrix(rng, 3, 3);
        auto f = [&](const Eigen::MatrixXd& c) { return (c - target).squaredNorm(); };
        const CandidateFn plain = [](const Eigen::MatrixXd& c, const Eigen::MatrixXd& g, double mu) -> Eigen::MatrixXd {
            return c - mu * g;
        };
        TrainState s;
        Eigen::MatrixXd C = random_matrix(rng, 3, 3);
        double value = f(C);
        for (int i = 0; i < 40; ++i) {
            const auto out = adapt_step(s, C, value, 2.0 * (C - target), f, 0.8, plain);
            CHECK(out.objective < value);
            C = out.C;
            value = out.objective;
        }
        CHECK(value < 1e-3);
    }
    SUBCASE("stall after 60 shrinks reports the objective") {
        TrainState s;
        const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
        try {
            adapt_step(s, C, 3.5, C * 2, [](const Eigen::MatrixXd&) { return 10.0; }, 0.8);
            FAIL("expected a stall");
        } catch (const StallError& e) {
            CHECK(e.objective == 3.5);
            CHECK(s.rate_factor == doctest::Approx(0.4 * std::pow(0.8, 60)));
        }
    }
    SUBCASE("numerical failures at a candidate count as rejections") {
        TrainState s;
        int calls = 0;
        const auto out = adapt_step(
            s, Eigen::MatrixXd::Identity(2, 2), 1.0, Eigen::MatrixXd::Identity(2, 2),
            [&](const Eigen::MatrixXd&) -> double {
                if (++calls < 3) throw ConditioningError("bad");
                return 0.5;
            },
            0.5);
        CHECK(out.backtracks == 2);
        CHECK(s.rate_factor == doctest::Approx(0.1));
    }
    SUBCASE("zero gradient leaves C unchanged") {
        TrainState s;
        const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
        const auto out = adapt_step(s, C, 1.0, Eigen::MatrixXd::Zero(2, 2), [](const Eigen::MatrixXd&) { return 2.0; }, 0.8);
        CHECK(out.C == C);
        CHECK(s.step == 0.0);
    }
}

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(validate(c));
    auto bad = [](auto mut) {
        TrainConfig t;
        mut(t);
        return t;
    };
    CHECK_THROWS_AS(validate(bad([](TrainConfig& t) { t.v1 = 1.0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](TrainConfig& t) { t.tau = 0.0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](TrainConfig& t) { t.t0 = 0; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](TrainConfig& t) { t.t0 = 301; })), ConfigError);
    CHECK_THROWS_AS(validate(bad([](TrainConfig& t) { t.batch_size = -1; })), ConfigError);
    CHECK(parse_algorithm("alg2") == Algorithm::alg2);
    CHECK_THROWS_AS(parse_algorithm("alg3"), ConfigError);
}

TEST_CASE("random_filters are seeded and orthonormal") {
    const auto a = random_filters(3, 7, 5);
    CHECK(a.C == random_filters(3, 7, 5).C);
    CHECK(a.C != random_filters(3, 7, 6).C);
    CHECK((a.C * a.C.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    CHECK_THROWS_AS(random_filters(4, 3, 0), ShapeError);
}

TEST_CASE("one-dimensional training on the orthonormal manifold stays at +-1") {
    Rng rng(13);
    const Eigen::MatrixXd X = random_matrix(rng, 1, 500);
    TrainConfig cfg;
    cfg.t_max = 10;
    cfg.t0 = 10;
    const auto r = run_training(X, cfg, init_tuning(1, 1, cfg.t0));
    CHECK(std::abs(r.filters.C(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-source ICA recovery, manifold discipline and monotone history") {
    const auto prob = ica_problem(21, 2, 20000);
    TrainConfig cfg;
    cfg.seed = 4;
    std::vector<double> ortho;
    const auto r = run_training(prob.xhat, cfg, init_tuning(2, 2, cfg.t0),
                                [&](const TrainState& s, const FilterBank& f, const TuningParams&) {
                                    if (s.epoch <= cfg.t0)
                                        ortho.push_back((f.C * f.C.transpose() - Eigen::MatrixXd::Identity(2, 2)).norm());
                                });
    CHECK(composite_amari(prob, r.filters.C) < 0.05);
    REQUIRE(!ortho.empty());
    for (double o : ortho) CHECK(o < 1e-8);
    const auto& h = r.state.history;
    for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i].phase == h[i - 1].phase) CHECK(h[i].objective <= h[i - 1].objective);

    const auto again = run_training(prob.xhat, cfg, init_tuning(2, 2, cfg.t0));
    CHECK(again.filters.C == r.filters.C);
    REQUIRE(again.state.history.size() == h.size());
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(again.state.history[i].objective == h[i].objective);
}

TEST_CASE("training is bitwise identical across thread counts") {
    const auto prob = ica_problem(22, 3, 6000);
    TrainConfig cfg;
    cfg.t_max = 60;
    cfg.t0 = 20;
    const auto a = run_training(prob.xhat, cfg, init_tuning(3, 3, cfg.t0));
    cfg.threads = 3;
    const auto b = run_training(prob.xhat, cfg, init_tuning(3, 3, cfg.t0));
    CHECK(a.filters.C == b.filters.C);
}

TEST_CASE("alg2 overcomplete, exact, mini-batch and bias variants run and descend") {
    const auto prob = ica_problem(23, 2, 3000);
    TrainConfig cfg;
    cfg.t_max = 40;
    cfg.t0 = 15;
    SUBCASE("alg2 with K1 > K0") {
        cfg.algorithm = Algorithm::alg2;
        const auto p = init_tuning(2, 5, cfg.t0);
        const auto r = run_training(prob.xhat, cfg, p);
        CHECK(r.filters.k1() == 5);
        CHECK(r.state.history.back().objective < r.state.history.front().objective);
    }
    SUBCASE("exact reference path") {
        cfg.algorithm = Algorithm::exact;
        const auto r = run_training(prob.xhat.leftCols(300), cfg, init_tuning(2, 3, cfg.t0));
        CHECK(r.state.history.back().objective < r.state.history.front().objective);
    }
    SUBCASE("mini-batches") {
        cfg.batch_size = 500;
        const auto r = run_training(prob.xhat, cfg, init_tuning(2, 2, cfg.t0));
        CHECK(r.state.history.size() == 40);
        CHECK(composite_amari(prob, r.filters.C) < 0.1);
    }
    SUBCASE("bias training never raises the objective") {
        cfg.train_bias = true;
        auto p = init_tuning(2, 2, cfg.t0);
        p.bias = 0.8;
        const auto r = run_training(prob.xhat, cfg, p);
        CHECK(std::abs(r.params.bias) < 0.8);
        const auto& h = r.state.history;
        for (std::size_t i = 1; i < h.size(); ++i)
            if (h[i].phase == h[i - 1].phase) CHECK(h[i].objective <= h[i - 1].objective);
    }
    SUBCASE("alg1 refuses non-square") {
        CHECK_THROWS_AS(run_training(prob.xhat, cfg, init_tuning(2, 3, cfg.t0)), ShapeError);
    }
    SUBCASE("data rank must match K0") {
        CHECK_THROWS_AS(run_training(prob.xhat, cfg, init_tuning(3, 3, cfg.t0)), ShapeError);
    }
}

TEST_CASE("proposition 2 inequalities on random draws") {
    Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const int k0 = static_cast<int>(1 + rng.index(3));
        const int k1 = k0 + static_cast<int>(rng.index(4));
        const Eigen::MatrixXd C = random_orthonormal_rows(rng, k0, k1);
        const int m = 5;
        Eigen::MatrixXd phi(k1, m);
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < k1; ++k) phi(k, j) = std::exp(rng.uniform(-2.0, 1.0));
        auto ld = [&](const Eigen::VectorXd& d) { return logdet(C * d.asDiagonal() * C.transpose()); };
        double mean_ld = 0.0;
        for (int j = 0; j < m; ++j) {
            mean_ld += ld(phi.col(j)) / m;
            CHECK(ld(phi.col(j)) <= 0.5 * ld(phi.col(j).cwiseAbs2()) + 1e-9);
        }
        const Eigen::VectorXd mean_phi = phi.rowwise().mean();
        const Eigen::VectorXd mean_phi_sq = phi.cwiseAbs2().rowwise().mean();
        CHECK(mean_ld <= ld(mean_phi) + 1e-9);
        CHECK(ld(mean_phi) <= 0.5 * ld(mean_phi.cwiseAbs2()) + 1e-9);
        CHECK(0.5 * ld(mean_phi.cwiseAbs2()) <= 0.5 * ld(mean_phi_sq) + 1e-9);
    }
}

TEST_CASE("checkpoint round trip and history csv") {
    Rng rng(15);
    Checkpoint c{{random_matrix(rng, 2, 3)}, 17, 1.25, -0.5, 0.032};
    testsupport::TempDir dir("ckpt");
    save_checkpoint(dir.path / "c.pick", c);
    const auto back = load_checkpoint(dir.path / "c.pick");
    CHECK(back.epoch == 17);
    CHECK(back.beta == 1.25);
    CHECK(back.bias == -0.5);
    CHECK(back.rate_factor == 0.032);
    CHECK((back.filters.C - c.filters.C).cwiseAbs().maxCoeff() < 1e-6);
    auto bytes = io::read_file(dir.path / "c.pick");
    bytes[1] = 'X';
    io::write_file_atomic(dir.path / "bad.pick", bytes);
    CHECK_THROWS_AS(load_checkpoint(dir.path / "bad.pick"), FormatError);
    bytes = io::read_file(dir.path / "c.pick");
    bytes.resize(bytes.size() - 2);
    io::write_file_atomic(dir.path / "short.pick", bytes);
    CHECK_THROWS_AS(load_checkpoint(dir.path / "short.pick"), LengthError);

    TrainState s;
    s.history.push_back({1, 1, 2.5, 0.1, 3, 0.01});
    const std::string csv = history_csv(s);
    CHECK(csv.rfind("epoch,objective,step,backtracks,wall_seconds\n1,2.5,0.1", 0) == 0);
}
