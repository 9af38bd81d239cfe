#include "swerom/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace swerom::bench {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot open '" + p.string() + "' for writing");
  return out;
}

constexpr const char* kReportHeader =
    "Nx,Ny,n,mode,k,m,status,offline_snapshots_s,offline_state_svd_s,offline_nonlinear_svd_s,"
    "offline_deim_points_s,offline_tensor_s,offline_deim_coeff_s,offline_total_s,online_s,"
    "online_nonlinear_s,online_jacobian_s,end_to_end_s,relerr_u,relerr_v,relerr_phi,rmse_u,"
    "rmse_v,rmse_phi,flops_model,nonlinear_eval_s";

// Status strings may contain commas; keep the CSV parseable without quoting.
std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

void write_reports(const ExperimentResult& res, const std::filesystem::path& dir) {
  auto out = open_out(dir / "run_report.csv");
  out << kReportHeader << '\n';
  for (const auto& r : res.reports) {
    out << r.Nx << ',' << r.Ny << ',' << r.n << ',' << r.mode << ',' << r.k << ',' << r.m << ','
        << sanitize(r.status) << ',' << num(r.offline.snapshots) << ','
        << num(r.offline.state_svd) << ',' << num(r.offline.nonlinear_svd) << ','
        << num(r.offline.deim_points) << ',' << num(r.offline.tensor_coefficients) << ','
        << num(r.offline.deim_coefficients) << ',' << num(r.offline.total()) << ','
        << num(r.online) << ',' << num(r.online_nonlinear) << ',' << num(r.online_jacobian) << ','
        << num(r.end_to_end);
    for (double e : r.rel_error) out << ',' << num(e);
    for (double e : r.rmse) out << ',' << num(e);
    out << ',' << r.flops << ',' << num(r.nonlinear_eval) << '\n';
  }
}

void write_spectra(const ExperimentResult& res, const std::filesystem::path& dir) {
  auto out = open_out(dir / "spectra.csv");
  out << "Nx,Ny,series,index,lambda\n";
  for (const auto& s : res.spectra)
    for (Index i = 0; i < s.lambda.size(); ++i)
      out << s.Nx << ',' << s.Ny << ',' << s.series << ',' << i + 1 << ',' << num(s.lambda[i])
          << '\n';
}

void write_points(const ExperimentResult& res, const std::filesystem::path& dir) {
  auto out = open_out(dir / "deim_points.csv");
  out << "Nx,Ny,m,term,kind,order,node,i,j,value\n";
  for (const auto& d : res.deim_points) {
    const std::string term(name_of(d.term));
    for (std::size_t o = 0; o < d.points.size(); ++o) {
      const Index node = d.points[o];
      out << d.Nx << ',' << d.Ny << ',' << d.m << ',' << term << ",point," << o + 1 << ',' << node
          << ',' << node % d.Nx << ',' << node / d.Nx << ','
          << num(node < d.max_abs.size() ? d.max_abs[node] : 0.0) << '\n';
    }
    for (Index node = 0; node < d.max_abs.size(); ++node)
      out << d.Nx << ',' << d.Ny << ',' << d.m << ',' << term << ",field,0," << node << ','
          << node % d.Nx << ',' << node / d.Nx << ',' << num(d.max_abs[node]) << '\n';
  }
}

void write_timing(const ExperimentResult& res, const std::filesystem::path& dir) {
  auto out = open_out(dir / "timing_vs_n.csv");
  out << "n,Nx,Ny,mode,m,offline_s,online_s\n";
  std::vector<const RunReport*> rows;
  for (const auto& r : res.reports)
    if (r.ok()) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const RunReport* a, const RunReport* b) {
    return std::tie(a->mode, a->m, a->n) < std::tie(b->mode, b->m, b->n);
  });
  for (const auto* r : rows)
    out << r->n << ',' << r->Nx << ',' << r->Ny << ',' << r->mode << ',' << r->m << ','
        << num(r->offline.total()) << ',' << num(r->online) << '\n';
}

// Minimal SVG line chart; log10 axes where requested.
struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

void write_svg(const std::filesystem::path& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& series, bool logx, bool logy) {
  constexpr double W = 720, H = 480, ml = 80, mr = 180, mt = 40, mb = 60;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (auto [x, y] : s.pts) {
      if ((logx && !(x > 0)) || (logy && !(y > 0))) continue;
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
    }
  if (!std::isfinite(x0)) throw Error("nothing to plot for '" + path.filename().string() + "'");
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (ty(v) - y0) / (y1 - y0) * (H - mt - mb); };

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
                                            "#7f7f7f", "#bcbd22"};
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\">" << title << "</text>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\""
      << H - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\">" << xlabel << (logx ? " (log10)" : "") << "</text>\n";
  out << "<text transform=\"translate(20," << (mt + H - mb) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel << (logy ? " (log10)" : "")
      << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4, fy = y0 + (y1 - y0) * t / 4;
    const double sx = ml + (W - ml - mr) * t / 4, sy = H - mb - (H - mt - mb) * t / 4;
    out << "<text x=\"" << sx << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">"
        << num(std::round(fx * 100) / 100) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
        << num(std::round(fy * 100) / 100) << "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : series[i].pts) {
      if ((logx && !(x > 0)) || (logy && !(y > 0))) continue;
      out << num(px(x)) << ',' << num(py(y)) << ' ';
    }
    out << "\"/>\n";
    const double ly = mt + 16 * static_cast<double>(i) + 10;
    out << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 30
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - mr + 35 << "\" y=\"" << ly + 4 << "\">" << series[i].label
        << "</text>\n";
  }
  out << "</svg>\n";
}

void write_svgs(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::map<std::string, Series> timing;
  for (const auto& r : res.reports) {
    if (!r.ok()) continue;
    const std::string label = r.mode + (r.m > 0 ? " m=" + std::to_string(r.m) : "");
    auto& s = timing[label];
    s.label = label;
    s.pts.emplace_back(static_cast<double>(r.n), r.online);
  }
  std::vector<Series> ts;
  for (auto& [_, s] : timing) {
    std::sort(s.pts.begin(), s.pts.end());
    ts.push_back(std::move(s));
  }
  if (!ts.empty())
    write_svg(dir / "timing_vs_n.svg", "On-line time vs state dimension", "n", "seconds", ts, true,
              true);

  std::vector<Series> sp;
  for (const auto& s : res.spectra) {
    Series se;
    se.label = s.series + " " + std::to_string(s.Nx) + "x" + std::to_string(s.Ny);
    for (Index i = 0; i < s.lambda.size(); ++i)
      se.pts.emplace_back(static_cast<double>(i + 1), s.lambda[i]);
    sp.push_back(std::move(se));
  }
  // A chart is skipped when it has no series; having neither is an error.
  if (ts.empty() && sp.empty()) throw Error("nothing to plot");
  if (!sp.empty())
    write_svg(dir / "spectra.svg", "Singular value spectra", "index", "lambda", sp, false, true);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void emit_plot_data(const ExperimentResult& result, PlotFormat format, const std::string& dir) {
  if (result.reports.empty() && result.spectra.empty()) throw Error("nothing to plot");
  const std::filesystem::path d(dir);
  std::error_code ec;
  std::filesystem::create_directories(d, ec);
  if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
  if (format == PlotFormat::Csv) {
    write_reports(result, d);
    write_spectra(result, d);
    write_points(result, d);
    write_timing(result, d);
  } else {
    write_svgs(result, d);
  }
}

std::vector<RunReport> read_run_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader)
    throw FileFormatError("'" + path + "' does not start with the run_report header");
  std::vector<RunReport> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 26)
      throw FileFormatError("'" + path + "' line " + std::to_string(lineno) + ": expected 26 fields");
    try {
      RunReport r;
      r.Nx = std::stol(c[0]);
      r.Ny = std::stol(c[1]);
      r.n = std::stol(c[2]);
      r.mode = c[3];
      r.k = std::stol(c[4]);
      r.m = std::stol(c[5]);
      r.status = c[6];
      r.offline.snapshots = std::stod(c[7]);
      r.offline.state_svd = std::stod(c[8]);
      r.offline.nonlinear_svd = std::stod(c[9]);
      r.offline.deim_points = std::stod(c[10]);
      r.offline.tensor_coefficients = std::stod(c[11]);
      r.offline.deim_coefficients = std::stod(c[12]);
      r.online = std::stod(c[14]);
      r.online_nonlinear = std::stod(c[15]);
      r.online_jacobian = std::stod(c[16]);
      r.end_to_end = std::stod(c[17]);
      for (int i = 0; i < 3; ++i) {
        r.rel_error[i] = std::stod(c[18 + i]);
        r.rmse[i] = std::stod(c[21 + i]);
      }
      r.flops = std::stoull(c[24]);
      r.nonlinear_eval = std::stod(c[25]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw FileFormatError("'" + path + "' line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

std::vector<SpectrumSeries> read_spectra(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "Nx,Ny,series,index,lambda")
    throw FileFormatError("'" + path + "' does not start with the spectra header");
  std::vector<SpectrumSeries> out;
  std::vector<std::vector<Scalar>> values;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 5)
      throw FileFormatError("'" + path + "' line " + std::to_string(lineno) + ": expected 5 fields");
    try {
      const Index nx = std::stol(c[0]), ny = std::stol(c[1]);
      const Index idx = std::stol(c[3]);
      if (out.empty() || out.back().Nx != nx || out.back().Ny != ny || out.back().series != c[2] ||
          idx == 1) {
        out.push_back({nx, ny, c[2], Vector()});
        values.emplace_back();
      }
      values.back().push_back(std::stod(c[4]));
    } catch (const std::logic_error&) {
      throw FileFormatError("'" + path + "' line " + std::to_string(lineno) + ": bad number");
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].lambda = Eigen::Map<const Vector>(values[i].data(), static_cast<Index>(values[i].size()));
  return out;
}

}  // namespace swerom::bench
