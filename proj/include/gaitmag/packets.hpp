#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gaitmag/geom.hpp"

namespace gaitmag {

/// Tracked pose of one Rx in the Tx frame.
struct PosePayload {
  Vec3 position;
  Quaternion orientation;
};

struct ImuPayload {
  Vec3 gyro;   // rad/s, body frame
  Vec3 accel;  // m/s^2, specific force, body frame
  Vec3 magno;  // earth-field units, body frame
};

/// One timestamped sample from one Rx. rx_id 1 is the left foot, 2 the right.
struct PacketRecord {
  double t = 0.0;
  int rx_id = 1;
  std::variant<PosePayload, ImuPayload> payload;
};

/// Raw field-space packet: what an Rx actually reports before the Tx solves
/// for position. Optional truth columns let the tracker score itself.
struct FieldPacket {
  double t = 0.0;
  int rx_id = 1;
  Vec3 b_rx;
  Quaternion q_rx;
  Quaternion q_tx;
  std::optional<PosePayload> truth;
};

enum class Modality { Magnetic, Imu };

std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view s);

inline constexpr std::string_view kMagneticHeader = "t,rx_id,x,y,z,qw,qx,qy,qz";
inline constexpr std::string_view kImuHeader = "t,rx_id,gx,gy,gz,ax,ay,az,mx,my,mz";
inline constexpr std::string_view kFieldHeader =
    "t,rx_id,bx,by,bz,qrx_w,qrx_x,qrx_y,qrx_z,qtx_w,qtx_x,qtx_y,qtx_z";
inline constexpr std::string_view kFieldTruthSuffix = ",true_x,true_y,true_z,true_qw,true_qx,true_qy,true_qz";

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

/// Packet logs are UTF-8, LF line endings, one header line then one row per
/// packet. Magnetic rows carry PosePayload, IMU rows ImuPayload.
void write_packet_log(std::ostream& os, Modality modality, const std::vector<PacketRecord>& packets);
void write_packet_log(const std::filesystem::path& path, Modality modality,
                      const std::vector<PacketRecord>& packets);

/// Parse errors report the 1-based line number.
std::vector<PacketRecord> read_packet_log(std::istream& is, Modality modality,
                                          std::string_view source = "<stream>");
std::vector<PacketRecord> read_packet_log(const std::filesystem::path& path, Modality modality);

void write_field_log(std::ostream& os, const std::vector<FieldPacket>& packets);
void write_field_log(const std::filesystem::path& path, const std::vector<FieldPacket>& packets);
std::vector<FieldPacket> read_field_log(std::istream& is, std::string_view source = "<stream>");
std::vector<FieldPacket> read_field_log(const std::filesystem::path& path);

}  // namespace gaitmag
