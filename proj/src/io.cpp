#include "covkit/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "covkit/error.hpp"

namespace covkit::io {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in, const std::string& what) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error(ErrorKind::DataError,
                  what + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " fields, header has " +
                      std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw Error(ErrorKind::DataError, what + ": missing header row");
  return t;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::DataError, "cannot open " + path.string());
  return read_table(in, path.string());
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::DataError, where + ": '" + s + "' is not a number");
  }
}

std::size_t column(const Table& t, const std::string& name, const std::string& what) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw Error(ErrorKind::DataError, what + ": missing column '" + name + "'");
}

std::string where(const std::filesystem::path& p, const Table& t, std::size_t r) {
  return p.string() + ":" + std::to_string(t.line_numbers[r]);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::DataError, "cannot write " + path.string());
  return out;
}

}  // namespace

PoData read_po_csv(const std::filesystem::path& path) {
  const auto t = read_table(path);
  const auto g = column(t, "group", path.string());
  PoData d;
  const auto p = static_cast<Eigen::Index>(t.header.size() - 1);
  d.covariates.resize(static_cast<Eigen::Index>(t.rows.size()), p);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const double v = parse_double(t.rows[r][c], where(path, t, r));
      if (c == g) {
        if (v != 1.0 && v != 2.0 && v != 3.0) {
          throw Error(ErrorKind::DataError, where(path, t, r) + ": group must be 1, 2 or 3");
        }
        d.groups.push_back(static_cast<int>(v));
      } else {
        d.covariates(static_cast<Eigen::Index>(r), j++) = v;
      }
    }
  }
  return d;
}

void write_po_csv(const std::filesystem::path& path, const PoData& data) {
  auto out = open_out(path);
  for (Eigen::Index j = 0; j < data.covariates.cols(); ++j) out << "x" << (j + 1) << ",";
  out << "group\n";
  for (Eigen::Index r = 0; r < data.covariates.rows(); ++r) {
    for (Eigen::Index j = 0; j < data.covariates.cols(); ++j)
      out << fmt_double(data.covariates(r, j)) << ",";
    out << data.groups[static_cast<std::size_t>(r)] << "\n";
  }
}

BasketballData read_basketball_csv(const std::filesystem::path& path) {
  const auto t = read_table(path);
  const auto c1 = column(t, "team1", path.string());
  const auto c2 = column(t, "team2", path.string());
  const auto s1 = column(t, "score1", path.string());
  const auto s2 = column(t, "score2", path.string());
  const auto h = column(t, "home", path.string());

  BasketballData d;
  std::map<std::string, std::size_t> index;
  auto team = [&](const std::string& name) {
    auto [it, inserted] = index.emplace(name, d.team_names.size());
    if (inserted) d.team_names.push_back(name);
    return it->second;
  };
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Game g;
    g.team1 = team(row[c1]);
    g.team2 = team(row[c2]);
    g.score1 = parse_double(row[s1], where(path, t, r));
    g.score2 = parse_double(row[s2], where(path, t, r));
    const std::string& home = row[h];
    if (home == "1" || home == "true") {
      g.home = true;
    } else if (home == "0" || home == "false") {
      g.home = false;
    } else {
      throw Error(ErrorKind::DataError, where(path, t, r) + ": home must be 0/1");
    }
    if (g.team1 == g.team2) {
      throw Error(ErrorKind::DataError, where(path, t, r) + ": team plays itself");
    }
    d.games.push_back(g);
  }
  d.n_teams = d.team_names.size();
  return d;
}

void write_basketball_csv(const std::filesystem::path& path,
                          const BasketballData& data) {
  auto out = open_out(path);
  auto label = [&](std::size_t i) {
    return i < data.team_names.size() ? data.team_names[i] : "T" + std::to_string(i);
  };
  out << "team1,team2,score1,score2,home\n";
  for (const auto& g : data.games) {
    out << label(g.team1) << "," << label(g.team2) << "," << fmt_double(g.score1)
        << "," << fmt_double(g.score2) << "," << (g.home ? 1 : 0) << "\n";
  }
}

std::vector<double> read_normal_csv(const std::filesystem::path& path) {
  const auto t = read_table(path);
  const auto x = column(t, "x", path.string());
  std::vector<double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back(parse_double(t.rows[r][x], where(path, t, r)));
  return out;
}

void write_normal_csv(const std::filesystem::path& path,
                      const std::vector<double>& data) {
  auto out = open_out(path);
  out << "x\n";
  for (double v : data) out << fmt_double(v) << "\n";
}

json to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const Matrix& m) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
  return {{"n", m.rows()}, {"m", m.cols()}, {"values", values}};
}

Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from_json(const json& j) {
  const auto n = j.at("n").get<Eigen::Index>();
  const auto m = j.contains("m") ? j.at("m").get<Eigen::Index>() : n;
  const auto values = j.at("values").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != n * m) {
    throw Error(ErrorKind::DataError, "matrix JSON has wrong number of values");
  }
  Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < m; ++k)
      out(i, k) = values[static_cast<std::size_t>(i * m + k)];
  return out;
}

std::string format_report_csv(const std::vector<ComparisonReport>& rows) {
  std::ostringstream out;
  out << "method,F,corr_F,G,time_seconds,evaluations\n";
  for (const auto& r : rows) {
    out << r.method << "," << fmt_double(r.frobenius_hessian) << ","
        << fmt_double(r.frobenius_corr) << "," << fmt_double(r.g_pct) << ","
        << fmt_double(r.time_seconds) << "," << r.evaluations << "\n";
  }
  return out.str();
}

std::vector<ComparisonReport> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  const auto t = read_table(in, "report");
  std::vector<ComparisonReport> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != 6) throw Error(ErrorKind::DataError, "report row needs 6 fields");
    ComparisonReport c;
    c.method = row[0];
    c.frobenius_hessian = parse_double(row[1], "report");
    c.frobenius_corr = parse_double(row[2], "report");
    c.g_pct = parse_double(row[3], "report");
    c.time_seconds = parse_double(row[4], "report");
    c.evaluations = static_cast<std::size_t>(std::stoull(row[5]));
    out.push_back(c);
  }
  return out;
}

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<ComparisonReport>& rows) {
  write_text(path, format_report_csv(rows));
}

std::vector<ComparisonReport> read_report_csv(const std::filesystem::path& path) {
  return parse_report_csv(read_text(path));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::DataError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace covkit::io
