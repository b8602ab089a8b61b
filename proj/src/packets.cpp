#include "gaitmag/packets.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gaitmag/error.hpp"

namespace gaitmag {

namespace {

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, const std::string& why) {
  throw Error(ErrorCode::Parse, std::string(source) + ":" + std::to_string(line) + ": " + why);
}

double parse_double(std::string_view cell, std::string_view source, std::size_t line) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    parse_fail(source, line, "invalid number '" + std::string(cell) + "'");
  return v;
}

int parse_rx(std::string_view cell, std::string_view source, std::size_t line) {
  int v = 0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) parse_fail(source, line, "invalid rx_id '" + std::string(cell) + "'");
  return v;
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return is;
}

void put_vec(std::ostream& os, const Vec3& v) {
  os << ',' << format_double(v.x) << ',' << format_double(v.y) << ',' << format_double(v.z);
}

void put_quat(std::ostream& os, const Quaternion& q) {
  os << ',' << format_double(q.w) << ',' << format_double(q.x) << ',' << format_double(q.y) << ','
     << format_double(q.z);
}

}  // namespace

std::string_view modality_name(Modality m) { return m == Modality::Magnetic ? "magnetic" : "imu"; }

Modality parse_modality(std::string_view s) {
  if (s == "magnetic") return Modality::Magnetic;
  if (s == "imu") return Modality::Imu;
  throw Error(ErrorCode::InvalidConfig, "unknown modality '" + std::string(s) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

void write_packet_log(std::ostream& os, Modality modality, const std::vector<PacketRecord>& packets) {
  os << (modality == Modality::Magnetic ? kMagneticHeader : kImuHeader) << '\n';
  for (const auto& p : packets) {
    os << format_double(p.t) << ',' << p.rx_id;
    if (modality == Modality::Magnetic) {
      const auto& pose = std::get<PosePayload>(p.payload);
      put_vec(os, pose.position);
      put_quat(os, pose.orientation);
    } else {
      const auto& imu = std::get<ImuPayload>(p.payload);
      put_vec(os, imu.gyro);
      put_vec(os, imu.accel);
      put_vec(os, imu.magno);
    }
    os << '\n';
  }
}

void write_packet_log(const std::filesystem::path& path, Modality modality,
                      const std::vector<PacketRecord>& packets) {
  auto os = open_out(path);
  write_packet_log(os, modality, packets);
  if (!os) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::vector<PacketRecord> read_packet_log(std::istream& is, Modality modality, std::string_view source) {
  const std::string_view header = modality == Modality::Magnetic ? kMagneticHeader : kImuHeader;
  const std::size_t columns = modality == Modality::Magnetic ? 9 : 11;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) parse_fail(source, 1, "missing header");
  ++line_no;
  if (trim_cr(line) != header) parse_fail(source, line_no, "expected header '" + std::string(header) + "'");

  std::vector<PacketRecord> out;
  while (std::getline(is, line)) {
    ++line_no;
    const auto row = trim_cr(line);
    if (row.empty()) continue;
    const auto cells = split_row(row);
    if (cells.size() != columns)
      parse_fail(source, line_no,
                 "expected " + std::to_string(columns) + " columns, got " + std::to_string(cells.size()));
    double v[11];
    v[0] = parse_double(cells[0], source, line_no);
    const int rx = parse_rx(cells[1], source, line_no);
    for (std::size_t i = 2; i < columns; ++i) v[i] = parse_double(cells[i], source, line_no);
    PacketRecord rec;
    rec.t = v[0];
    rec.rx_id = rx;
    if (modality == Modality::Magnetic)
      rec.payload = PosePayload{{v[2], v[3], v[4]}, {v[5], v[6], v[7], v[8]}};
    else
      rec.payload = ImuPayload{{v[2], v[3], v[4]}, {v[5], v[6], v[7]}, {v[8], v[9], v[10]}};
    out.push_back(rec);
  }
  return out;
}

std::vector<PacketRecord> read_packet_log(const std::filesystem::path& path, Modality modality) {
  auto is = open_in(path);
  return read_packet_log(is, modality, path.string());
}

void write_field_log(std::ostream& os, const std::vector<FieldPacket>& packets) {
  const bool with_truth = !packets.empty() && packets.front().truth.has_value();
  os << kFieldHeader;
  if (with_truth) os << kFieldTruthSuffix;
  os << '\n';
  for (const auto& p : packets) {
    os << format_double(p.t) << ',' << p.rx_id;
    put_vec(os, p.b_rx);
    put_quat(os, p.q_rx);
    put_quat(os, p.q_tx);
    if (with_truth) {
      if (!p.truth) throw Error(ErrorCode::InvalidConfig, "field log mixes rows with and without truth");
      put_vec(os, p.truth->position);
      put_quat(os, p.truth->orientation);
    }
    os << '\n';
  }
}

void write_field_log(const std::filesystem::path& path, const std::vector<FieldPacket>& packets) {
  auto os = open_out(path);
  write_field_log(os, packets);
  if (!os) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::vector<FieldPacket> read_field_log(std::istream& is, std::string_view source) {
  std::string line;
  if (!std::getline(is, line)) parse_fail(source, 1, "missing header");
  std::size_t line_no = 1;
  const auto header = trim_cr(line);
  const std::string with_truth_header = std::string(kFieldHeader) + std::string(kFieldTruthSuffix);
  bool with_truth = false;
  if (header == with_truth_header)
    with_truth = true;
  else if (header != kFieldHeader)
    parse_fail(source, line_no, "expected header '" + std::string(kFieldHeader) + "[" +
                                    std::string(kFieldTruthSuffix) + "]'");
  const std::size_t columns = with_truth ? 20 : 13;

  std::vector<FieldPacket> out;
  while (std::getline(is, line)) {
    ++line_no;
    const auto row = trim_cr(line);
    if (row.empty()) continue;
    const auto cells = split_row(row);
    if (cells.size() != columns)
      parse_fail(source, line_no,
                 "expected " + std::to_string(columns) + " columns, got " + std::to_string(cells.size()));
    double v[20];
    v[0] = parse_double(cells[0], source, line_no);
    const int rx = parse_rx(cells[1], source, line_no);
    for (std::size_t i = 2; i < columns; ++i) v[i] = parse_double(cells[i], source, line_no);
    FieldPacket p;
    p.t = v[0];
    p.rx_id = rx;
    p.b_rx = {v[2], v[3], v[4]};
    p.q_rx = {v[5], v[6], v[7], v[8]};
    p.q_tx = {v[9], v[10], v[11], v[12]};
    if (with_truth) p.truth = PosePayload{{v[13], v[14], v[15]}, {v[16], v[17], v[18], v[19]}};
    out.push_back(p);
  }
  return out;
}

std::vector<FieldPacket> read_field_log(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_field_log(is, path.string());
}

}  // namespace gaitmag
