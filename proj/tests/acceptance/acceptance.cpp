// Acceptance suite: one PASS/FAIL/BLOCKED line per criterion. Exit status is
// nonzero when any criterion fails; BLOCKED criteria (missing external data)
// do not count as failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "cvgae/diagnostics.hpp"
#include "driver.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace cvgae;
namespace fs = std::filesystem;

namespace {

enum class Verdict { kPass, kFail, kBlocked };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)}; }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const std::vector<std::uint64_t> kSeeds{0, 1, 2, 3, 4};

Graph criterion_sbm(std::uint64_t seed) {
  SbmSpec spec;
  spec.sizes = {50, 50, 50};
  spec.p_in = 0.2;
  spec.p_out = 0.01;
  spec.feat_sep = 2.0;
  spec.noise_sd = 0.5;
  spec.seed = seed;
  return generate_sbm(spec);
}

struct SbmRun {
  driver::TrainRun run;
  double seconds = 0.0;
};

SbmRun train_sbm(std::uint64_t seed, const std::function<void(TrainConfig&)>& tweak = {}) {
  const Graph g = criterion_sbm(seed);
  TrainConfig cfg;
  cfg.seed = seed;
  if (tweak) tweak(cfg);
  Stopwatch clock;
  SbmRun out{driver::run_training(g, cfg), 0.0};
  out.seconds = clock.seconds();
  return out;
}

// Runs of the synthetic benchmark shared by several criteria.
std::vector<SbmRun>& full_runs() {
  static std::vector<SbmRun> runs = [] {
    std::vector<SbmRun> r;
    for (auto s : kSeeds) r.push_back(train_sbm(s));
    return r;
  }();
  return runs;
}

double final_acc(const SbmRun& r) { return r.run.evaluation.all->acc; }

// 1: analytic gradients against central differences.
Outcome gradients() {
  Stopwatch clock;
  const auto report = driver::run_grad_check(20, 2024, 1e-5);
  const double secs = clock.seconds();
  std::string worst_name;
  for (const auto& [name, err] : report.max_error) {
    if (err == report.worst()) worst_name = name;
  }
  return pass_if(report.worst() <= 1e-4 && secs < 30.0,
                 fmt("20 instances, %zu objectives, worst rel err %.2e (%s) <= 1e-4, %.2f s < 30 s",
                     report.max_error.size(), report.worst(), worst_name.c_str(), secs));
}

// 2: closed-form L3 against Monte Carlo, and the negated form against the same estimate.
Outcome l3_sign() {
  auto rng = rng_stream(7, Stream::kTestData);
  const std::size_t draws = 100000;
  int closed_ok = 0, negated_fail = 0;
  double worst_z = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const std::size_t n = 1 + rng.below(4), d = 1 + rng.below(3);
    Posterior pos{Dense(n, d), Dense(n, d)}, neg{Dense(n, d), Dense(n, d)};
    for (double& x : pos.mu.values()) x = rng.normal();
    for (double& x : neg.mu.values()) x = rng.normal();
    for (double& x : pos.logvar.values()) x = rng.uniform(-1.0, 0.5);
    for (double& x : neg.logvar.values()) x = rng.uniform(-0.5, 1.0);
    const double two_n = 2.0 * static_cast<double>(n);
    double sum = 0.0, sq = 0.0;
    for (std::size_t t = 0; t < draws; ++t) {
      double v = 0.0;
      for (std::size_t k = 0; k < n * d; ++k) {
        const double z = pos.mu.values()[k] + std::exp(0.5 * pos.logvar.values()[k]) * rng.normal();
        const double dz = z - neg.mu.values()[k];
        const double log_p = -0.5 * z * z;
        const double log_q = -0.5 * neg.logvar.values()[k] - 0.5 * dz * dz * std::exp(-neg.logvar.values()[k]);
        v += log_p - log_q;  // the 2*pi constants cancel
      }
      v *= two_n;
      sum += v;
      sq += v * v;
    }
    const double mean = sum / static_cast<double>(draws);
    const double se = std::sqrt((sq / static_cast<double>(draws) - mean * mean) / static_cast<double>(draws));
    const double closed = loss_l3(pos, neg);
    const double z = std::abs(closed - mean) / se;
    worst_z = std::max(worst_z, z);
    closed_ok += z <= 3.0 ? 1 : 0;
    negated_fail += std::abs(-closed - mean) / se > 3.0 ? 1 : 0;
  }
  return pass_if(closed_ok == 20 && negated_fail == 20,
                 fmt("closed form within 3 SE on %d/20 pairs (worst %.2f SE); negated form rejected on %d/20",
                     closed_ok, worst_z, negated_fail));
}

// 3: the bound gap is the KL between the views, nonnegative, and zero for equal views.
Outcome theorem_gap() {
  auto rng = rng_stream(3, Stream::kTestData);
  ObjectiveOptions opt;  // printed 2N weighting
  double worst_rel = 0.0, min_gap = INFINITY;
  bool equal_views_zero = true;
  for (int t = 0; t < 100; ++t) {
    for (bool same : {false, true}) {
      driver::GradInstance inst = driver::random_grad_instance(rng, {});
      if (same) inst.a_pos = inst.a;
      const auto prop_a = normalize_adjacency(inst.a);
      const auto prop_pos = normalize_adjacency(inst.a_pos);
      const Encoding pos = encode(inst.params, prop_pos, inst.features);
      const Encoding neg = encode(inst.params, prop_a, inst.features);
      const LossBreakdown l =
          cvgae_objective(inst.params, inst.features, prop_pos, pos, prop_a, neg, inst.a_gen, inst.q, inst.noise, opt)
              .loss;
      if (same) {
        equal_views_zero = equal_views_zero && l.theorem1_gap == 0.0;
        continue;
      }
      const double expect = 2.0 * static_cast<double>(inst.features.rows()) * kl_between(pos.posterior, neg.posterior);
      const double bound_diff = l.total - l.elbo_clus;
      const double scale = std::max({std::abs(expect), std::abs(l.total), 1e-300});
      worst_rel = std::max({worst_rel, std::abs(l.theorem1_gap - expect) / std::max(std::abs(expect), 1e-300),
                            std::abs(bound_diff - expect) / scale});
      min_gap = std::min(min_gap, l.theorem1_gap);
    }
  }
  return pass_if(worst_rel <= 1e-9 && min_gap >= 0.0 && equal_views_zero,
                 fmt("100 instances: worst relative deviation %.2e <= 1e-9, min gap %.3e >= 0, equal views give 0: %s",
                     worst_rel, min_gap, equal_views_zero ? "yes" : "no"));
}

// 4: metric oracles.
Outcome metric_oracles() {
  auto rng = rng_stream(4, Stream::kTestData);
  int exact = 0, hungarian_exact = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 1 + rng.below(6), n = 1 + rng.below(40);
    std::vector<int> pred(n), truth(n);
    for (auto& x : pred) x = static_cast<int>(rng.below(k));
    for (auto& x : truth) x = static_cast<int>(rng.below(k));
    exact += clustering_metrics(pred, truth).acc == oracle::brute_force_acc(pred, truth, k) ? 1 : 0;
    Dense cost(k, k);
    for (double& x : cost.values()) x = static_cast<double>(rng.below(10));
    hungarian_exact += oracle::assignment_cost(cost, hungarian(cost)) == oracle::brute_force_min_cost(cost) ? 1 : 0;
  }
  const std::vector<int> pred{0, 0, 1, 1}, truth{0, 1, 0, 1};
  const MetricsRecord m = clustering_metrics(pred, truth);
  const bool worked = std::abs(m.acc - 0.5) <= 1e-12 && std::abs(m.nmi) <= 1e-12 && std::abs(m.ari + 0.5) <= 1e-12;
  return pass_if(exact == 500 && hungarian_exact == 500 && worked,
                 fmt("ACC = brute force on %d/500, Hungarian cost = brute force on %d/500; worked example acc %.12g nmi %.3g ari %.12g",
                     exact, hungarian_exact, m.acc, m.nmi, m.ari));
}

// 5: refinement invariants.
Outcome refinement() {
  auto rng = rng_stream(5, Stream::kTestData);
  Stopwatch clock;
  int bad = 0;
  std::string first;
  for (int t = 0; t < 10000; ++t) {
    const auto c = oracle::random_refine_case(rng);
    std::string err = oracle::check_refine_case(c);
    const auto lo = ClusterState::from_assignments(c.p, c.alpha);
    const auto hi = ClusterState::from_assignments(c.p, c.alpha + rng.uniform(0.0, 0.3));
    if (err.empty() && !std::includes(lo.theta.begin(), lo.theta.end(), hi.theta.begin(), hi.theta.end())) {
      err = "theta not monotone in alpha";
    }
    if (!err.empty()) {
      if (bad++ == 0) first = err;
    }
  }
  const double secs = clock.seconds();
  return pass_if(bad == 0 && secs < 10.0,
                 fmt("10000 cases, %d violations%s%s, %.2f s < 10 s", bad, bad ? ": " : "", first.c_str(), secs));
}

// 6: synthetic end to end.
Outcome synthetic() {
  std::vector<double> acc;
  double slowest = 0.0;
  int reached = 0;
  for (const auto& r : full_runs()) {
    acc.push_back(final_acc(r));
    slowest = std::max(slowest, r.seconds);
    const bool hit = r.run.clustering.reached_stop_fraction && r.run.clustering.iterations <= 2000;
    reached += hit ? 1 : 0;
  }
  const double med = median(acc);
  return pass_if(med >= 0.95 && reached == 5 && slowest < 120.0,
                 fmt("median ACC %.4f >= 0.95 over 5 seeds, |theta| >= 80%% before the cap on %d/5, slowest seed %.2f s < 120 s",
                     med, reached, slowest));
}

// 7: Cora, when the data is present.
Outcome cora() {
  const char* dir = std::getenv("CVGAE_CORA_DIR");
  if (dir == nullptr || !fs::exists(fs::path(dir) / "edges.txt")) {
    return {Verdict::kBlocked, "set CVGAE_CORA_DIR to a directory with edges.txt, features.txt, labels.csv"};
  }
  driver::DataSource src;
  src.edges = fs::path(dir) / "edges.txt";
  src.features = fs::exists(fs::path(dir) / "features.txt") ? fs::path(dir) / "features.txt" : fs::path(dir) / "features.csv";
  src.labels = fs::path(dir) / "labels.csv";
  const Graph g = driver::load(src);
  std::vector<double> acc, nmi, ari;
  double slowest = 0.0;
  for (auto s : kSeeds) {
    TrainConfig cfg;
    cfg.seed = s;
    Stopwatch clock;
    const auto run = driver::run_training(g, cfg, std::nullopt, false);
    slowest = std::max(slowest, clock.seconds());
    acc.push_back(run.evaluation.all->acc);
    nmi.push_back(run.evaluation.all->nmi);
    ari.push_back(run.evaluation.all->ari);
  }
  const double med = median(acc);
  return pass_if(med >= 0.70 && slowest <= 900.0,
                 fmt("median ACC %.4f >= 0.70 (NMI %.4f, ARI %.4f), slowest seed %.1f s <= 900 s", med, median(nmi),
                     median(ari), slowest));
}

// 8: ablation ordering.
Outcome ablations() {
  std::vector<double> full;
  for (const auto& r : full_runs()) full.push_back(final_acc(r));
  const double full_med = median(full);
  struct Variant {
    const char* name;
    void (*apply)(TrainConfig&);
  };
  const Variant variants[] = {{"-FR", [](TrainConfig& c) { c.no_fr = true; }},
                              {"-FD", [](TrainConfig& c) { c.no_fd = true; }},
                              {"-PC", [](TrainConfig& c) { c.no_pc = true; }},
                              {"-CL", [](TrainConfig& c) { c.no_cl = true; }}};
  bool ok = true;
  std::string detail = fmt("full %.4f", full_med);
  for (const auto& v : variants) {
    std::vector<double> acc;
    for (auto s : kSeeds) acc.push_back(final_acc(train_sbm(s, v.apply)));
    const double med = median(acc);
    ok = ok && full_med >= med - 0.01;
    detail += fmt(", %s %.4f", v.name, med);
  }
  return pass_if(ok, detail + " (full >= each ablation - 0.01)");
}

// 9: diagnostics sanity.
Outcome diagnostics() {
  bool bounded = true;
  std::size_t checked = 0;
  auto check_lambdas = [&](const driver::TrainRun& run) {
    for (const auto& rec : run.log) {
      for (const char* key : {"lambda_fr", "lambda_fd"}) {
        if (rec[key].is_null()) continue;
        const double v = rec[key].get<double>();
        bounded = bounded && v >= -1.0 && v <= 1.0;
        ++checked;
      }
    }
  };
  for (const auto& r : full_runs()) check_lambdas(r.run);

  auto rng = rng_stream(9, Stream::kTestData);
  bool invariant = true;
  double au_err = 0.0;
  for (int t = 0; t < 200; ++t) {
    Dense a(6, 3), b(6, 3);
    for (double& x : a.values()) x = rng.normal();
    for (double& x : b.values()) x = rng.normal();
    Dense a2 = a;
    a2 *= rng.uniform(1e-3, 1e3);
    invariant = invariant && std::abs(lambda_fr(a2, b) - lambda_fr(a, b)) <= 1e-12 &&
                std::abs(lambda_fd(b, a2) - lambda_fd(b, a)) <= 1e-12;

    Dense m(2 + rng.below(100), 4);
    const double offset = rng.uniform(-100.0, 100.0);
    for (double& x : m.values()) x = offset + rng.normal();
    const ActiveUnits au = active_units(m);
    for (std::size_t u = 0; u < m.cols(); ++u) {
      double mean = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) mean += m(i, u);
      mean /= static_cast<double>(m.rows());
      for (std::size_t i = 0; i < m.rows(); ++i) ss += (m(i, u) - mean) * (m(i, u) - mean);
      au_err = std::max(au_err, std::abs(au.variance[u] - ss / static_cast<double>(m.rows() - 1)));
    }
  }

  // Fixed horizon: the default stop rule can end clustering before any
  // trend forms, so both runs take the same number of steps.
  auto horizon = [](TrainConfig& c) {
    c.stop_fraction = 1.0;
    c.max_clus_iters = 200;
  };
  std::vector<double> sums;
  for (auto s : kSeeds) {
    const auto full = train_sbm(s, horizon);
    const auto no_pc = train_sbm(s, [&](TrainConfig& c) {
      horizon(c);
      c.no_pc = true;
    });
    auto series = [](const driver::TrainRun& run) {
      std::vector<std::vector<double>> out;
      for (const auto& rec : run.log) {
        if (rec["phase"] == "clustering") out.push_back(rec["au_variance"].get<std::vector<double>>());
      }
      return out;
    };
    check_lambdas(full.run);
    check_lambdas(no_pc.run);
    const auto diff = cumulative_difference(series(full.run), series(no_pc.run));
    double sum = 0.0;
    for (double x : diff.back()) sum += x;
    sums.push_back(sum);
  }
  const double med = median(sums);
  return pass_if(bounded && invariant && au_err <= 1e-12 && med >= 0.0,
                 fmt("%zu lambda values in [-1,1]: %s; rescale invariant: %s; AU vs two-pass max err %.1e <= 1e-12; "
                     "median final cumulative AU difference (full - no_pc, 200 steps) %.4g >= 0",
                     checked, bounded ? "yes" : "no", invariant ? "yes" : "no", au_err, med));
}

// 10: determinism of the written summary.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("cvgae_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::string> bytes;
  for (const char* name : {"a", "b"}) {
    const Graph g = criterion_sbm(11);
    TrainConfig cfg;
    cfg.seed = 11;
    const auto run = driver::run_training(g, cfg);
    driver::write_run(root / name, run, g);
    std::ifstream in(root / name / "summary.json", std::ios::binary);
    bytes.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  fs::remove_all(root);
  return pass_if(!bytes[0].empty() && bytes[0] == bytes[1],
                 fmt("two complete runs wrote %zu-byte summary.json files, identical: %s", bytes[0].size(),
                     bytes[0] == bytes[1] ? "yes" : "no"));
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "gradient correctness", gradients},     {2, "L3 sign resolution", l3_sign},
      {3, "bound gap ordering", theorem_gap},     {4, "metric oracles", metric_oracles},
      {5, "refinement invariants", refinement},   {6, "synthetic end-to-end", synthetic},
      {7, "Cora desk-scale run", cora},           {8, "ablation direction", ablations},
      {9, "diagnostics sanity", diagnostics},     {10, "determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Verdict::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kFail ? "FAIL" : "BLOCKED";
    failures += o.verdict == Verdict::kFail ? 1 : 0;
    std::printf("%-7s C%-2d %s: %s\n", tag, c.id, c.title, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
