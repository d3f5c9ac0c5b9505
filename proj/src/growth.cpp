#include "glmclust/growth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "glmclust/glm.hpp"

namespace glmclust {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

double days_after(Date t, Date t0) { return static_cast<double>((t - t0).count()); }

}  // namespace

Date parse_date(std::string_view text) {
  text = trim(text);
  auto bad = [&] { return InputError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::size_t at, std::size_t len, auto& value) {
    const auto [ptr, ec] = std::from_chars(text.data() + at, text.data() + at + len, value);
    if (ec != std::errc{} || ptr != text.data() + at + len) throw bad();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return Date{ymd};
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

SeriesLoad load_series(std::istream& in, Date t0, const DateWindow& window) {
  if (window.start && *window.start <= t0) throw InputError("t0 must be strictly before the window start");
  SeriesLoad out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::pair<Date, long>>> rows;  // (date, line number) per region
  std::vector<std::vector<double>> values;
  std::vector<std::string> names;
  std::vector<bool> seen_any;

  std::string line;
  long line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_commas(view);
    if (!header) {
      std::string_view first = fields.front();
      if (first.size() >= 3 && first.substr(0, 3) == "\xEF\xBB\xBF") first.remove_prefix(3);
      if (fields.size() != 3 || first != "date" || fields[1] != "region" || fields[2] != "new_cases")
        throw ParseError("expected header 'date,region,new_cases'", line_no);
      header = true;
      continue;
    }
    if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
    Date date;
    try {
      date = parse_date(fields[0]);
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
    const std::string region(fields[1]);
    if (region.empty()) throw ParseError("empty region name", line_no);
    double count = 0;
    const auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), count);
    if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size() || !std::isfinite(count) ||
        std::floor(count) != count)
      throw ParseError("new_cases must be an integer", line_no);

    auto [it, inserted] = index.emplace(region, names.size());
    if (inserted) {
      names.push_back(region);
      rows.emplace_back();
      values.emplace_back();
    }
    if ((window.start && date < *window.start) || (window.end && date > *window.end)) {
      ++out.dropped_outside_window;
      continue;
    }
    if (date <= t0) {
      ++out.dropped_not_after_t0;
      continue;
    }
    if (count < 0) {
      std::cerr << "warning: line " << line_no << ": negative count " << count << " for " << region
                << " clamped to 0\n";
      ++out.clamped_negative;
      count = 0;
    }
    rows[it->second].emplace_back(date, line_no);
    values[it->second].push_back(count);
  }
  if (!header) throw ParseError("missing header", line_no + 1);
  if (names.empty()) throw EmptyRegion("no data rows");

  for (std::size_t r = 0; r < names.size(); ++r) {
    if (rows[r].empty()) throw EmptyRegion("region '" + names[r] + "' has no rows after windowing");
    std::vector<std::size_t> order(rows[r].size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rows[r][a].first < rows[r][b].first; });
    RegionSeries s;
    s.region = names[r];
    for (std::size_t j = 0; j < order.size(); ++j) {
      const auto& [date, ln] = rows[r][order[j]];
      if (!s.dates.empty() && s.dates.back() == date)
        throw ParseError("duplicate date " + format_date(date) + " for region " + names[r], ln);
      s.dates.push_back(date);
      s.counts.push_back(values[r][order[j]]);
    }
    out.regions.push_back(std::move(s));
  }
  return out;
}

SeriesLoad load_series(const std::string& path, Date t0, const DateWindow& window) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_series(in, t0, window);
}

GrowthModel growth_model_from_name(std::string_view name) {
  if (name == "exp" || name == "exponential") return GrowthModel::Exponential;
  if (name == "gamma") return GrowthModel::Gamma;
  throw InputError("unknown growth model '" + std::string(name) + "'");
}

std::optional<double> peak_offset(double alpha, double beta) {
  if (alpha > 0 && beta < 0) return -alpha / beta;
  return std::nullopt;
}

Date peak_date(Date t0, double offset_days) {
  return t0 + std::chrono::days{static_cast<long>(std::lround(offset_days))};
}

ModelObject growth_object(const RegionSeries& series, Date t0) {
  const auto n = static_cast<Eigen::Index>(series.dates.size());
  if (series.counts.size() != series.dates.size()) throw LengthMismatch("series dates and counts differ in length");
  ModelObject o;
  o.id = series.region;
  o.y.resize(n);
  o.x1 = Eigen::MatrixXd::Ones(n, 1);
  o.x2.resize(n, 2);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = days_after(series.dates[static_cast<std::size_t>(j)], t0);
    if (!(t > 0)) throw InputError("series date not after t0 in region " + series.region);
    o.y(j) = series.counts[static_cast<std::size_t>(j)];
    o.x2(j, 0) = std::log(t);
    o.x2(j, 1) = t;
  }
  return o;
}

GrowthFit fit_growth(const RegionSeries& series, GrowthModel model, Date t0) {
  const ModelObject obj = growth_object(series, t0);
  const Eigen::Index n = obj.n();
  const Eigen::Index p = model == GrowthModel::Gamma ? 3 : 2;
  if (n < p + 2) throw InputError("region " + series.region + " needs at least " + std::to_string(p + 2) + " observations");
  if (obj.y.sum() == 0) throw DegenerateSeries("region " + series.region + " has only zero counts");

  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  if (model == GrowthModel::Gamma) {
    x.col(1) = obj.x2.col(0);
    x.col(2) = obj.x2.col(1);
  } else {
    x.col(1) = obj.x2.col(1);
  }
  const auto family = FamilySpec::quasi_poisson();
  const auto fit = fit_glm(obj.y, x, family);

  GrowthFit g;
  g.model = model;
  g.n = static_cast<int>(n);
  g.converged = fit.converged;
  g.deviance = fit.deviance;
  g.dispersion = estimate_dispersion(fit.pearson, fit.residual_df);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(n, obj.y.mean());
  g.null_deviance = deviance(obj.y, mean, family);
  g.r_squared = g.null_deviance > 0 ? std::clamp(1.0 - g.deviance / g.null_deviance, 0.0, 1.0) : 0.0;
  const Eigen::VectorXd se = (g.dispersion * fit.unscaled_covariance.diagonal()).cwiseSqrt();
  g.mu = fit.coefficients(0);
  g.se_mu = se(0);
  if (model == GrowthModel::Gamma) {
    g.alpha = fit.coefficients(1);
    g.se_alpha = se(1);
    g.beta = fit.coefficients(2);
    g.se_beta = se(2);
    g.peak_offset = peak_offset(g.alpha, g.beta);
    if (g.peak_offset) g.peak_date = peak_date(t0, *g.peak_offset);
  } else {
    g.beta = fit.coefficients(1);
    g.se_beta = se(1);
  }
  return g;
}

ClusterReport cluster_regions(const std::vector<RegionSeries>& series, Date t0, const ClusterOptions& options) {
  if (series.size() < 3) throw InputError("clustering needs at least 3 regions");
  std::vector<ModelObject> objects;
  objects.reserve(series.size());
  for (const auto& s : series) objects.push_back(growth_object(s, t0));
  const int n = static_cast<int>(objects.size());

  ModelTester tester(objects, options.family);
  EngineConfig engine;
  engine.family = options.family;
  engine.n_restarts = options.n_restarts;
  engine.max_sweeps = options.max_sweeps;
  engine.rng_seed = options.rng_seed;

  ClusterReport report;
  report.t0 = t0;
  report.family = options.family;
  report.series = series;

  ClusterResult chosen;
  if (options.k) {
    engine.k = *options.k;
    chosen = run(tester, engine);
  } else {
    int k_max = options.k_max > 0 ? options.k_max : default_k_max(n);
    if (options.family.has_dispersion()) k_max = std::min(k_max, n - 1);
    report.trace = select_k(tester, 1, k_max, options.criterion, engine);
    chosen = report.trace->selected();
  }
  report.k = chosen.k;

  // Relabel clusters by first appearance for stable output.
  std::vector<int> relabel(static_cast<std::size_t>(report.k), -1);
  int next = 0;
  for (int a : chosen.assignment)
    if (relabel[static_cast<std::size_t>(a)] < 0) relabel[static_cast<std::size_t>(a)] = next++;
  for (int a : chosen.assignment) report.assignment.push_back(relabel[static_cast<std::size_t>(a)]);

  ClusteredDesign design{objects, report.assignment, report.k};
  const auto fit = fit_clustered(design, options.family);
  report.dispersion =
      options.family.has_dispersion() ? estimate_dispersion(fit.pearson, fit.residual_df) : 1.0;
  Eigen::Index row = 0;
  for (int i = 0; i < n; ++i) {
    report.region_mu.push_back(fit.free_block(i)(0));
    report.fitted.push_back(fit.fitted_means.segment(row, objects[static_cast<std::size_t>(i)].n()));
    row += objects[static_cast<std::size_t>(i)].n();
  }
  for (int s = 0; s < report.k; ++s) {
    ClusterSummary c;
    c.cluster = s;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (report.assignment[static_cast<std::size_t>(i)] != s) continue;
      c.members.push_back(series[static_cast<std::size_t>(i)].region);
      const double lp = chosen.per_object_log_p.empty() ? 0.0 : chosen.per_object_log_p[static_cast<std::size_t>(i)];
      if (lp > best) {
        best = lp;
        c.representative = series[static_cast<std::size_t>(i)].region;
      }
    }
    const auto shared = fit.shared_block(s);
    c.alpha = shared(0);
    c.beta = shared(1);
    const auto& cov = fit.shared_unscaled_covariance[static_cast<std::size_t>(s)];
    c.se_alpha = std::sqrt(report.dispersion * cov(0, 0));
    c.se_beta = std::sqrt(report.dispersion * cov(1, 1));
    if (auto off = peak_offset(c.alpha, c.beta)) c.peak = peak_date(t0, *off);
    report.clusters.push_back(std::move(c));
  }

  report.deviance_k = fit.deviance;
  report.deviance_one = tester.clustering(std::vector<int>(static_cast<std::size_t>(n), 0), 1).deviance;
  std::vector<int> singletons(static_cast<std::size_t>(n));
  std::iota(singletons.begin(), singletons.end(), 0);
  report.deviance_all = tester.clustering(singletons, n).deviance;
  const double span = report.deviance_one - report.deviance_all;
  report.partial_r_squared = span > 0 ? std::clamp((report.deviance_one - report.deviance_k) / span, 0.0, 1.0) : 1.0;
  return report;
}

void emit_report(const ClusterReport& report, const std::string& out_dir) {
  if (report.clusters.empty() || report.series.empty()) throw InputError("empty report");
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());

  {
    auto out = open_out(dir / "clusters.csv");
    out << "cluster,representative,size,alpha,se_alpha,beta,se_beta,peak\n";
    for (const auto& c : report.clusters) {
      out << c.cluster + 1 << ',' << c.representative << ',' << c.members.size() << ',' << fmt(c.alpha) << ','
          << fmt(c.se_alpha) << ',' << fmt(c.beta) << ',' << fmt(c.se_beta) << ','
          << (c.peak ? format_date(*c.peak) : std::string("x")) << '\n';
    }
  }
  {
    auto out = open_out(dir / "assignment.csv");
    out << "region,cluster,mu\n";
    for (std::size_t i = 0; i < report.series.size(); ++i)
      out << report.series[i].region << ',' << report.assignment[i] + 1 << ',' << fmt(report.region_mu[i]) << '\n';
  }
  {
    auto out = open_out(dir / "fitted.csv");
    out << "region,cluster,date,observed,fitted\n";
    for (std::size_t i = 0; i < report.series.size(); ++i) {
      const auto& s = report.series[i];
      for (std::size_t j = 0; j < s.dates.size(); ++j)
        out << s.region << ',' << report.assignment[i] + 1 << ',' << format_date(s.dates[j]) << ','
            << fmt(s.counts[j]) << ',' << fmt(report.fitted[i](static_cast<Eigen::Index>(j))) << '\n';
    }
  }
  {
    auto out = open_out(dir / "gic.csv");
    out << "k,criterion,kappa,score,dispersion,deviance,selected\n";
    if (report.trace) {
      const auto& t = *report.trace;
      for (std::size_t i = 0; i < t.k_values.size(); ++i)
        out << t.k_values[i] << ',' << t.criterion_name << ',' << fmt(t.kappa) << ',' << fmt(t.scores[i]) << ','
            << (t.dispersions[i] ? fmt(*t.dispersions[i]) : std::string()) << ',' << fmt(t.deviances[i]) << ','
            << (t.k_values[i] == t.selected_k ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open_out(dir / "summary.txt");
    out << "family: " << report.family.name() << '\n';
    out << "t0: " << format_date(report.t0) << '\n';
    out << "regions: " << report.series.size() << '\n';
    out << "clusters: " << report.k;
    if (report.trace) out << " (selected by " << report.trace->criterion_name << ")";
    out << '\n';
    out << "dispersion: " << fmt(report.dispersion) << '\n';
    out << "deviance (1 cluster): " << fmt(report.deviance_one) << '\n';
    out << "deviance (k clusters): " << fmt(report.deviance_k) << '\n';
    out << "deviance (1 per region): " << fmt(report.deviance_all) << '\n';
    out << "partial R^2: " << fmt(report.partial_r_squared) << '\n';
    for (const auto& c : report.clusters) {
      out << "\ncluster " << c.cluster + 1 << " (" << c.members.size() << " regions, representative "
          << c.representative << ")\n";
      out << "  alpha " << fmt(c.alpha) << " (" << fmt(c.se_alpha) << ")  beta " << fmt(c.beta) << " ("
          << fmt(c.se_beta) << ")  peak " << (c.peak ? format_date(*c.peak) : std::string("x (out of control)"))
          << '\n';
      out << "  members:";
      for (const auto& m : c.members) out << ' ' << m;
      out << '\n';
    }
  }
}

}  // namespace glmclust
