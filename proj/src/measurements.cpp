#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "flexgrid/errors.hpp"
#include "flexgrid/gridmodel.hpp"

namespace flexgrid {

MeasurementFrame MeasurementFrame::empty(const GridModel& grid, Timestamp ts) {
  MeasurementFrame f;
  f.timestamp = ts;
  const std::size_t n = grid.bus_count();
  f.p.assign(n, 0.0);
  f.q.assign(n, 0.0);
  f.load_p.assign(n, 0.0);
  f.load_q.assign(n, 0.0);
  f.gen_p.assign(n, 0.0);
  f.gen_q.assign(n, 0.0);
  f.v_measured.assign(n, std::nullopt);
  f.i_measured.assign(grid.branch_count(), std::nullopt);
  return f;
}

void MeasurementFrame::add_power(std::size_t bus, double p_pu, double q_pu) {
  p[bus] += p_pu;
  q[bus] += q_pu;
  if (p_pu >= 0.0) {
    load_p[bus] += p_pu;
    load_q[bus] += q_pu;
  } else {
    gen_p[bus] -= p_pu;
    gen_q[bus] -= q_pu;
  }
}

double MeasurementFrame::total_load() const {
  return std::accumulate(load_p.begin(), load_p.end(), 0.0);
}

double MeasurementFrame::total_generation() const {
  return std::accumulate(gen_p.begin(), gen_p.end(), 0.0);
}

namespace {

constexpr std::string_view kHeader = "timestamp,bus_id,p_kw,q_kvar,v_pu,branch_id,i_pu";

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& c : cells) {
    while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
    while (!c.empty() && (c.back() == ' ' || c.back() == '\t')) c.remove_suffix(1);
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell, std::size_t line_no, const char* col) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ": column " + col + " is not a number: '" +
                     std::string(cell) + "'");
  }
  return v;
}

}  // namespace

std::vector<MeasurementFrame> parse_measurements(std::string_view csv_text,
                                                 const GridModel& grid) {
  std::vector<MeasurementFrame> frames;
  const double base_kva = grid.base_power_va() / 1000.0;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < csv_text.size()) {
    std::size_t end = csv_text.find('\n', pos);
    if (end == std::string_view::npos) end = csv_text.size();
    std::string_view line = csv_text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kHeader) {
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" +
                         std::string(kHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != 7) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 7 columns, got " +
                       std::to_string(cells.size()));
    }
    const Timestamp ts = parse_rfc3339(cells[0]);
    if (seconds_of_day(ts) % kSlotLength.count() != 0) {
      throw ParseError("line " + std::to_string(line_no) + ": timestamp '" +
                       std::string(cells[0]) + "' is not aligned to a 10-minute slot");
    }
    if (frames.empty() || frames.back().timestamp < ts) {
      frames.push_back(MeasurementFrame::empty(grid, ts));
    } else if (ts < frames.back().timestamp) {
      throw NonMonotonicTimestampError("line " + std::to_string(line_no) + ": timestamp '" +
                                       std::string(cells[0]) + "' precedes " +
                                       format_rfc3339(frames.back().timestamp));
    }
    MeasurementFrame& frame = frames.back();

    const auto p_kw = parse_number(cells[2], line_no, "p_kw");
    const auto q_kvar = parse_number(cells[3], line_no, "q_kvar");
    const auto v_pu = parse_number(cells[4], line_no, "v_pu");
    const auto i_pu = parse_number(cells[6], line_no, "i_pu");

    if (!cells[1].empty()) {
      const auto bus = grid.find_bus(cells[1]);
      if (!bus) {
        throw UnknownIdError("line " + std::to_string(line_no) + ": unknown bus id '" +
                             std::string(cells[1]) + "'");
      }
      if (p_kw || q_kvar) {
        frame.add_power(*bus, to_per_unit(p_kw.value_or(0.0), base_kva),
                        to_per_unit(q_kvar.value_or(0.0), base_kva));
      }
      if (v_pu) {
        if (frame.v_measured[*bus] && *frame.v_measured[*bus] != *v_pu) {
          throw ParseError("line " + std::to_string(line_no) + ": conflicting voltages for bus '" +
                           std::string(cells[1]) + "'");
        }
        frame.v_measured[*bus] = v_pu;
      }
    } else if (p_kw || q_kvar || v_pu) {
      throw ParseError("line " + std::to_string(line_no) + ": bus quantities without bus_id");
    }

    if (!cells[5].empty()) {
      const auto branch = grid.find_branch(cells[5]);
      if (!branch) {
        throw UnknownIdError("line " + std::to_string(line_no) + ": unknown branch id '" +
                             std::string(cells[5]) + "'");
      }
      if (!i_pu) {
        throw ParseError("line " + std::to_string(line_no) + ": branch_id without i_pu");
      }
      if (*i_pu < 0.0) {
        throw ParseError("line " + std::to_string(line_no) + ": negative current magnitude");
      }
      if (frame.i_measured[*branch] && *frame.i_measured[*branch] != *i_pu) {
        throw ParseError("line " + std::to_string(line_no) + ": conflicting currents for branch '" +
                         std::string(cells[5]) + "'");
      }
      frame.i_measured[*branch] = i_pu;
    } else if (i_pu) {
      throw ParseError("line " + std::to_string(line_no) + ": i_pu without branch_id");
    }
  }
  if (!header_seen) throw ParseError("measurement CSV is empty");
  if (frames.empty()) throw ParseError("measurement CSV has no data rows");

  const auto monitored_signature = [](const MeasurementFrame& f) {
    std::vector<bool> sig;
    for (const auto& v : f.v_measured) sig.push_back(v.has_value());
    for (const auto& i : f.i_measured) sig.push_back(i.has_value());
    return sig;
  };
  const auto reference = monitored_signature(frames.front());
  for (const auto& f : frames) {
    if (monitored_signature(f) != reference) {
      throw ParseError("monitored voltage/current set changes at " + format_rfc3339(f.timestamp));
    }
  }
  return frames;
}

std::vector<MeasurementFrame> load_measurements(const std::filesystem::path& path,
                                                const GridModel& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_measurements(buf.str(), grid);
}

std::string measurements_to_csv(const std::vector<MeasurementFrame>& frames,
                                const GridModel& grid) {
  const double base_kva = grid.base_power_va() / 1000.0;
  std::ostringstream out;
  out << kHeader << '\n';
  for (const MeasurementFrame& f : frames) {
    const std::string ts = format_rfc3339(f.timestamp);
    for (std::size_t b = 0; b < grid.bus_count(); ++b) {
      const Bus& bus = grid.buses()[b];
      const bool write_load = f.load_p[b] != 0.0 || f.load_q[b] != 0.0 || bus.carries_load();
      const bool write_gen = f.gen_p[b] != 0.0 || f.gen_q[b] != 0.0 || bus.carries_pv();
      std::string v_cell = f.v_measured[b] ? format_double(*f.v_measured[b]) : std::string();
      if (write_load) {
        out << ts << ',' << bus.id << ',' << format_double(from_per_unit(f.load_p[b], base_kva))
            << ',' << format_double(from_per_unit(f.load_q[b], base_kva)) << ',' << v_cell
            << ",,\n";
        v_cell.clear();
      }
      if (write_gen && (f.gen_p[b] > 0.0 || !write_load)) {
        // A zero production row would read back as consumption; only emit it when needed.
        out << ts << ',' << bus.id << ',' << format_double(-from_per_unit(f.gen_p[b], base_kva))
            << ',' << format_double(-from_per_unit(f.gen_q[b], base_kva)) << ',' << v_cell
            << ",,\n";
        v_cell.clear();
      }
      if (!v_cell.empty()) out << ts << ',' << bus.id << ",,," << v_cell << ",,\n";
    }
    for (std::size_t k = 0; k < grid.branch_count(); ++k) {
      if (f.i_measured[k]) {
        out << ts << ",,,,," << grid.branches()[k].id << ',' << format_double(*f.i_measured[k])
            << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace flexgrid
