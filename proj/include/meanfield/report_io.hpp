#pragma once

// File outputs: CSV tables (full double round-trip precision), the JSON
// report, and the fixed-template SVG bar chart.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "diagnostics.hpp"
#include "engine.hpp"
#include "limitlaw.hpp"
#include "rng.hpp"

namespace meanfield {

inline constexpr int report_schema_version = 1;

namespace detail {

inline std::string fmt_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write file: " + path.string());
  return f;
}

}  // namespace detail

inline void write_maxima_csv(const std::filesystem::path& path, const MaximaSample& sample) {
  auto f = detail::open_out(path);
  const bool with_tau = !sample.tau_n.empty();
  f << (with_tau ? "rep,seed,M,U,tau_N\n" : "rep,seed,M,U\n");
  for (std::size_t j = 0; j < sample.m_values.size(); ++j) {
    f << j << ',' << sample.seeds[j] << ',' << detail::fmt_g17(sample.m_values[j]) << ','
      << detail::fmt_g17(sample.u_values[j]);
    if (with_tau) f << ',' << detail::fmt_g17(sample.tau_n[j]);
    f << '\n';
  }
}

inline void write_histogram_csv(const std::filesystem::path& path, const HistogramReport& rep) {
  auto f = detail::open_out(path);
  f << "bin_lo,bin_hi,count\n";
  for (std::size_t k = 0; k < rep.counts.size(); ++k)
    f << detail::fmt_g17(double(k) * rep.bin_width) << ','
      << detail::fmt_g17(double(k + 1) * rep.bin_width) << ',' << rep.counts[k] << '\n';
}

inline void write_law_csv(const std::filesystem::path& path, const LimitLawPath& law) {
  auto f = detail::open_out(path);
  f << "t,m,sigma2,tau\n";
  for (std::size_t k = 0; k < law.t.size(); ++k)
    f << detail::fmt_g17(law.t[k]) << ',' << detail::fmt_g17(law.mean[k]) << ','
      << detail::fmt_g17(law.var[k]) << ',' << detail::fmt_g17(law.tau[k]) << '\n';
}

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const std::vector<TrajectoryRow>& rows) {
  auto f = detail::open_out(path);
  f << "t,tau_N";
  if (!rows.empty())
    for (std::size_t i = 0; i < rows.front().positions.size(); ++i) f << ",x" << i;
  f << '\n';
  for (const auto& row : rows) {
    f << detail::fmt_g17(row.t) << ',' << detail::fmt_g17(row.tau_n);
    for (const double x : row.positions) f << ',' << detail::fmt_g17(x);
    f << '\n';
  }
}

// Bar chart of bin counts with a horizontal reference line at the uniform
// level R * bin_width. Fixed template, one rect per bin.
inline std::string render_chart_svg(const HistogramReport& rep, std::uint64_t replications,
                                    const std::string& title) {
  const std::size_t bins = rep.counts.size();
  const double w = 640.0, h = 420.0;
  const double left = 60.0, right = 620.0, top = 30.0, bottom = 380.0;
  const double ref_level = double(replications) * rep.bin_width;
  double ymax = ref_level;
  for (const auto c : rep.counts) ymax = std::max(ymax, double(c));
  ymax *= 1.15;
  if (ymax <= 0.0) ymax = 1.0;

  const auto ypix = [&](double v) { return bottom - (bottom - top) * (v / ymax); };
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
    << "<text x=\"" << 0.5 * (left + right) << "\" y=\"20\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  const double bar_span = (right - left) / double(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double x = left + bar_span * double(k);
    const double y = ypix(double(rep.counts[k]));
    s << "<rect class=\"bar\" x=\"" << x + 1.0 << "\" y=\"" << y << "\" width=\"" << bar_span - 2.0
      << "\" height=\"" << bottom - y << "\" fill=\"#4878b0\" stroke=\"#2f4f73\"/>\n";
  }
  s << "<line class=\"ref\" x1=\"" << left << "\" y1=\"" << ypix(ref_level) << "\" x2=\"" << right
    << "\" y2=\"" << ypix(ref_level) << "\" stroke=\"#c03a2b\" stroke-dasharray=\"6,4\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << left << "\" y=\"" << bottom + 16.0
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n"
    << "<text x=\"" << right << "\" y=\"" << bottom + 16.0
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1</text>\n"
    << "<text x=\"" << left - 6.0 << "\" y=\"" << ypix(ref_level) + 4.0
    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
    << detail::fmt_g17(ref_level) << "</text>\n"
    << "</svg>\n";
  return s.str();
}

inline nlohmann::json sample_report_json(const MaximaSample& sample, const HistogramReport& rep) {
  nlohmann::json j;
  j["N"] = sample.n;
  j["R"] = sample.replications;
  j["mode"] = to_string(sample.mode);
  j["dt"] = sample.dt;
  j["t_star"] = sample.t_star;
  j["base_seed"] = sample.base_seed;
  j["model"] = sample.model_id;
  j["normalizers"] = {{"a", sample.det_normalizers.a},
                      {"b", sample.det_normalizers.b},
                      {"source", sample.det_normalizers.source == NormalizerSource::deterministic
                                     ? "deterministic"
                                     : "stochastic"}};
  j["ks"] = rep.ks;
  j["ks_critical_5pct"] = rep.ks_critical_5pct;
  j["ks_critical_1pct"] = rep.ks_critical_1pct;
  j["bin_width"] = rep.bin_width;
  j["counts"] = rep.counts;
  j["error_budget"] = {{"discretization", rep.budget.discretization},
                       {"lln_per_bin", rep.budget.lln_per_bin}};
  return j;
}

}  // namespace meanfield
