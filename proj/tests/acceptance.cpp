// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sharplab/closedform.hpp"
#include "sharplab/dataset.hpp"
#include "sharplab/error.hpp"
#include "sharplab/gradcheck.hpp"
#include "sharplab/network.hpp"
#include "sharplab/numkit.hpp"
#include "sharplab/records.hpp"
#include "sharplab/report.hpp"
#include "sharplab/sweep.hpp"

namespace fs = std::filesystem;
using namespace sharplab;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("AC%d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

// Runs a criterion, turning an exception into a FAIL line.
void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = clock_type::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  char t[48];
  std::snprintf(t, sizeof t, " [%.1fs]", seconds_since(t0));
  o.detail += t;
  report(id, name, o);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double r_of(const std::vector<RunRecord>& recs, const std::string& x, const std::string& y) {
  std::vector<double> xs, ys;
  for (const auto& r : recs) {
    if (!r.ok()) continue;
    xs.push_back(numeric_field(r, x));
    ys.push_back(numeric_field(r, y));
  }
  return pearson(xs, ys);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome ac1_oracle() {
  const auto t0 = clock_type::now();
  struct Case {
    const char* name;
    Activation hidden, output;
    LossKind loss;
  };
  const Case cases[] = {
      {"tanh_softmax_xent", Activation::tanh, Activation::softmax, LossKind::categorical_crossentropy},
      {"relu_softmax_xent", Activation::relu, Activation::softmax, LossKind::categorical_crossentropy},
      {"relu_linear_sq", Activation::relu, Activation::identity, LossKind::squared_error}};
  double worst = 0.0, worst_abs = 0.0;
  std::size_t nets = 0;
  for (const auto& c : cases) {
    const auto r = run_gradient_check(c.hidden, c.output, c.loss, 20, derive_seed(2024, c.name), 1e-6);
    worst = std::max(worst, r.max_error());
    worst_abs = std::max(worst_abs, r.max_abs_diff);
    nets += r.nets;
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-5 && nets == 60 && elapsed < 60.0,
          fmt("%zu nets, max rel error %.2e (limit 1e-5, abs floor 1e-8), max abs diff %.2e, %.1fs (limit 60s)", nets,
              worst, worst_abs, elapsed)};
}

Outcome ac2_linear_equivalence(const Dataset& data) {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t in = 1 + rng.uniform_index(49);
    const std::size_t out = 1 + rng.uniform_index(10);
    Mlp net = init_mlp({in, out}, Activation::tanh, Activation::identity, rng);
    for (double& b : net.biases[0]) b = rng.normal();
    const double norm = weight_norm(net).raw_l2;
    Matrix a = rng_normal(rng, 50, in, 0.0, 3.0);
    Matrix b(30, in);
    for (double& v : b.values()) v = rng.uniform();
    worst = std::max({worst, std::abs(sharpness(net, a, 1000) - norm), std::abs(sharpness(net, b, 7) - norm)});
  }
  // the 49→10 case on real inputs
  Mlp mnist_net = init_mlp({49, 10}, Activation::tanh, Activation::identity, rng);
  const double norm = weight_norm(mnist_net).raw_l2;
  worst = std::max({worst, std::abs(sharpness(mnist_net, data.train_x, 1000) - norm),
                    std::abs(sharpness(mnist_net, data.test_x, 500) - norm)});
  return {worst <= 1e-12, fmt("21 nets, max |sharpness - ||W||| = %.2e (limit 1e-12)", worst)};
}

Outcome ac3_table() {
  constexpr std::size_t budgets[6] = {1000, 5000, 8000, 10000, 12000, 14000};
  constexpr std::size_t table[6][6] = {{17, 84, 134, 167, 200, 234}, {14, 47, 64, 75, 84, 92},
                                       {12, 37, 50, 57, 64, 70},      {11, 32, 42, 48, 54, 59},
                                       {10, 28, 37, 43, 47, 52},      {9, 26, 34, 39, 43, 47}};
  const auto t0 = clock_type::now();
  int exact = 0, within = 0;
  for (std::size_t d = 1; d <= 6; ++d)
    for (std::size_t b = 0; b < 6; ++b) {
      const std::size_t got = solve_units(d, budgets[b]);
      const std::size_t want = table[d - 1][b];
      exact += got == want;
      within += got + 1 >= want && got <= want + 1;
    }
  const double elapsed = seconds_since(t0);
  return {within == 36 && elapsed < 1.0,
          fmt("%d/36 exact, %d/36 within +-1 (required 36)", exact, within)};
}

Outcome ac4_linear(const Dataset& data, const fs::path& workdir, std::vector<RunRecord>& out) {
  LinearSweepConfig cfg;
  cfg.seed = 0;
  const auto result = run_linear_sweep(data, cfg);
  out = result.records;
  write_runs(out, workdir / "runs_linear.csv");
  std::string ranks;
  for (const auto& d : result.dims) ranks += fmt("%zu:%zu ", d.dim, d.rank);
  const double r_norm_loss = r_of(out, "normalized_norm", "test_loss");
  const double r_sharp_acc = r_of(out, "sharpness", "test_acc");
  const double r_norm_acc = r_of(out, "normalized_norm", "test_acc");
  const bool pass = out.size() == 57 && r_norm_loss >= 0.8 && r_sharp_acc <= -0.8 &&
                    std::abs(r_sharp_acc) > std::abs(r_norm_acc);
  return {pass, fmt("%zu solutions, ranks %sr(norm, loss) = %.3f (>= 0.8), r(sharpness, acc) = %.3f (<= -0.8), "
                    "r(norm, acc) = %.3f (|.| below %.3f)",
                    out.size(), ranks.c_str(), r_norm_loss, r_sharp_acc, r_norm_acc, std::abs(r_sharp_acc))};
}

Outcome ac5_sweeps(const Dataset& data, const fs::path& workdir, std::vector<RunRecord>& all) {
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  bool pass = true;
  std::string detail;
  for (Family f : kAllFamilies) {
    SweepConfig cfg = sweep_preset(f, Scale::ci, 0);
    cfg.workers = workers;
    const auto recs = run_family_sweep(data, cfg);
    write_runs(recs, workdir / ("runs_" + std::string(to_string(f)) + "_ci.csv"));
    all.insert(all.end(), recs.begin(), recs.end());
    std::size_t ok = 0;
    for (const auto& r : recs) ok += r.ok();
    const bool sq = f == Family::relu_linear_sq;
    const std::string metric = sq ? "test_loss" : "test_acc";
    const double rs = r_of(recs, "sharpness", metric);
    const double rn = r_of(recs, "normalized_norm", metric);
    const bool sign_ok = sq ? rs >= 0.5 : rs <= -0.5;
    const bool order_ok = std::abs(rs) > std::abs(rn);
    pass = pass && sign_ok && order_ok && ok >= 2;
    detail += fmt("%s%s: %zu/%zu ok, r(sharpness, %s) = %.3f (%s 0.5), r(norm, %s) = %.3f%s", detail.empty() ? "" : "; ",
                  std::string(to_string(f)).c_str(), ok, recs.size(), metric.c_str(), rs, sq ? ">=" : "<= -",
                  metric.c_str(), rn, order_ok ? "" : " [norm not weaker]");
  }
  return {pass, detail};
}

Outcome ac6_depth(const std::vector<RunRecord>& all) {
  if (all.empty()) return {false, "no sweep records"};
  bool pass = true;
  std::string detail;
  std::vector<double> depths, sharp;
  for (Family f : kAllFamilies) {
    std::vector<RunRecord> recs;
    for (const auto& r : all)
      if (r.family == to_string(f)) recs.push_back(r);
    const DepthSummary s = depth_study(recs);
    const DepthRow& first = s.rows.front();
    const DepthRow& last = s.rows.back();
    const bool lower = first.depth == 1 && last.depth == 6 && last.mean_sharpness < first.mean_sharpness;
    pass = pass && lower;
    detail += fmt("%s: mean sharpness depth1 %.4g, depth6 %.4g, r(depth, sharpness) = %.3f; ",
                  std::string(to_string(f)).c_str(), first.mean_sharpness, last.mean_sharpness, s.r_depth_sharpness);
    if (s.r_depth_log_sharpness) detail += fmt("log r = %.3f; ", *s.r_depth_log_sharpness);
    for (const auto& r : recs) {
      if (!r.ok()) continue;
      depths.push_back(static_cast<double>(r.depth));
      sharp.push_back(r.sharpness);
    }
  }
  const double pooled = pearson(depths, sharp);
  pass = pass && pooled < 0.0;
  detail += fmt("all runs r(depth, sharpness) = %.3f (< 0)", pooled);
  return {pass, detail};
}

Outcome ac7_anchored() {
  Rng rng(2718);
  double worst_opt = 0.0, worst_row = 0.0;
  std::size_t systems = 0;
  const std::pair<std::size_t, std::size_t> shapes[] = {{60, 20}, {100, 35}, {20, 50}, {30, 120}, {40, 40}};
  for (const auto& [n, d] : shapes) {
    for (int rep = 0; rep < 4; ++rep) {
      const Matrix phi = rng_normal(rng, n, d, 0.0, 1.0);
      const Matrix y = rng_normal(rng, n, 10, 0.0, 1.0);
      const Matrix anchor = make_anchor(rng.next(), d, 10, std::pow(10.0, rep - 1.0));
      const Matrix w = anchored_least_squares(phi, y, anchor).w;
      const Matrix grad = matmul_tn(phi, matmul(phi, w) - y);
      const double scale = std::max(1.0, frobenius_norm(y)) * std::max(1.0, frobenius_norm(phi));
      worst_opt = std::max(worst_opt, frobenius_norm(grad) / scale);
      const Matrix diff = w - anchor;
      const Matrix pinv = pseudoinverse(phi);
      const Matrix leftover = diff - matmul(matmul(pinv, phi), diff);
      worst_row = std::max(worst_row, frobenius_norm(leftover) / std::max(1.0, frobenius_norm(diff)));
      ++systems;
    }
  }
  // nearest-minimizer check on an underdetermined system
  const Matrix phi = rng_normal(rng, 20, 50, 0.0, 1.0);
  const Matrix y = rng_normal(rng, 20, 10, 0.0, 1.0);
  const Matrix anchor = make_anchor(5, 50, 10, 10.0);
  const Matrix w = anchored_least_squares(phi, y, anchor).w;
  const Matrix null_proj = Matrix::identity(50) - matmul(pseudoinverse(phi), phi);
  const double best = frobenius_norm(w - anchor);
  std::size_t beaten = 0;
  for (int k = 0; k < 1000; ++k) {
    const Matrix v = w + matmul(null_proj, rng_normal(rng, 50, 10, 0.0, 0.01 + 0.01 * (k % 50)));
    beaten += frobenius_norm(v - anchor) > best;
  }
  const bool pass = worst_opt <= 1e-8 && worst_row <= 1e-8 && beaten == 1000;
  return {pass, fmt("%zu systems, max optimality residual %.2e, max row-space residual %.2e (limits 1e-8), "
                    "nearest among %zu/1000 alternatives",
                    systems, worst_opt, worst_row, beaten)};
}

Outcome ac8_replay(const Dataset& data, const fs::path& workdir) {
  double worst = 0.0;
  std::size_t replayed = 0;
  std::vector<fs::path> csvs;
  for (Family f : kAllFamilies) {
    const fs::path csv = workdir / ("runs_" + std::string(to_string(f)) + "_ci.csv");
    csvs.push_back(csv);
    const auto recs = read_runs(csv);
    const SweepConfig cfg = sweep_preset(f, Scale::ci, 0);
    // the cheapest and the deepest cell of each family, rebuilt from the CSV row alone
    for (const RunRecord* r : {&recs.front(), &recs[recs.size() - 3]}) {
      const RunRecord again = replay_record(*r, data, cfg.train, cfg.sharpness_cap);
      worst = std::max({worst, std::abs(again.sharpness - r->sharpness), std::abs(again.raw_norm - r->raw_norm),
                        std::abs(again.normalized_norm - r->normalized_norm), std::abs(again.test_acc - r->test_acc)});
      ++replayed;
    }
  }
  const fs::path linear_csv = workdir / "runs_linear.csv";
  csvs.push_back(linear_csv);
  const auto linear = read_runs(linear_csv);
  for (std::size_t i : {std::size_t{0}, std::size_t{20}, linear.size() - 1}) {
    const RunRecord again = replay_linear_record(linear[i], data);
    worst = std::max({worst, std::abs(again.sharpness - linear[i].sharpness),
                      std::abs(again.raw_norm - linear[i].raw_norm),
                      std::abs(again.normalized_norm - linear[i].normalized_norm),
                      std::abs(again.test_acc - linear[i].test_acc)});
    ++replayed;
  }

  // reports are a function of the CSV bytes
  bool identical = true;
  std::size_t documents = 0;
  for (const auto& csv : csvs) {
    for (const auto& name : figure_names()) {
      const auto fig = find_figure(name);
      std::string first, second;
      try {
        first = render_figure(read_runs(csv), *fig);
        second = render_figure(read_runs(csv), *fig);
      } catch (const Error&) {
        continue;  // e.g. depth figure on single-depth linear records
      }
      const fs::path a = workdir / "svg_a.svg", b = workdir / "svg_b.svg";
      write_text(a, first);
      write_text(b, second);
      identical = identical && read_bytes(a) == read_bytes(b);
      ++documents;
    }
    identical = identical && correlation_report(read_runs(csv)).to_json().dump(2) ==
                                 correlation_report(read_runs(csv)).to_json().dump(2);
  }
  const bool pass = worst <= 1e-9 && identical && documents > 0;
  return {pass, fmt("%zu records replayed, max deviation %.2e (limit 1e-9); %zu SVG documents and %zu JSON "
                    "reports %s",
                    replayed, worst, documents, csvs.size(), identical ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path workdir = "acceptance_out";
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--workdir") workdir = argv[i + 1];
  fs::create_directories(workdir);

  fs::path mnist = SHARPLAB_MNIST_DIR;
  if (const char* env = std::getenv("SHARPLAB_DATA_DIR")) mnist = env;

  Dataset data;
  try {
    const fs::path cache = workdir / "mnist7x7.bin";
    save_cache(prepare_mnist(mnist, 1000, 0), cache);
    data = load_cache(cache);
  } catch (const std::exception& e) {
    std::printf("cannot prepare MNIST from %s: %s\n", mnist.string().c_str(), e.what());
    for (int id = 1; id <= 8; ++id) std::printf("AC%d FAIL  dataset unavailable\n", id);
    return 1;
  }

  std::vector<RunRecord> linear, sweeps;
  criterion(1, "gradient/Jacobian oracle", ac1_oracle);
  criterion(2, "linear equivalence", [&] { return ac2_linear_equivalence(data); });
  criterion(3, "architecture grid", ac3_table);
  criterion(4, "linear sweep trends", [&] { return ac4_linear(data, workdir, linear); });
  criterion(5, "family sweeps (ci scale)", [&] { return ac5_sweeps(data, workdir, sweeps); });
  criterion(6, "depth study", [&] { return ac6_depth(sweeps); });
  criterion(7, "anchored least squares", ac7_anchored);
  criterion(8, "determinism and replay", [&] { return ac8_replay(data, workdir); });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
