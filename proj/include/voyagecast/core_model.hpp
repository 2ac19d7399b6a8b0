#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace voyagecast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kHeadingUnavailable = 511.0;

/// One raw AIS tuple. The last three fields are only present in labeled
/// (training) data.
struct AisRecord {
    std::string ship_id;
    int ship_type = 0;
    double speed = 0.0;
    double lon = 0.0;
    double lat = 0.0;
    double course = 0.0;
    double heading = kHeadingUnavailable;
    std::int64_t timestamp = 0;
    std::string departure_port;
    std::optional<double> reported_draught;
    std::optional<std::int64_t> arrival_time;
    std::optional<std::string> arrival_port;
    std::string trip_id;

    friend bool operator==(const AisRecord&, const AisRecord&) = default;
};

struct Port {
    std::string name;
    int code = 0;
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const Port&, const Port&) = default;
};

/// Bijective port name <-> dense integer code lookup table. Codes are assigned
/// after sorting names lexicographically, so the same port set always yields
/// the same codes.
class PortRegistry {
public:
    struct Entry {
        std::string name;
        double lon = 0.0;
        double lat = 0.0;
    };

    PortRegistry() = default;
    explicit PortRegistry(std::vector<Entry> entries);

    /// -1 for names not in the registry.
    [[nodiscard]] int encode(const std::string& name) const;
    [[nodiscard]] const std::string& decode(int code) const;
    [[nodiscard]] const Port& port(int code) const;
    [[nodiscard]] bool contains(int code) const { return code >= 0 && code < size(); }

    [[nodiscard]] int size() const { return static_cast<int>(ports_.size()); }
    [[nodiscard]] bool empty() const { return ports_.empty(); }
    [[nodiscard]] const std::vector<Port>& ports() const { return ports_; }

    friend bool operator==(const PortRegistry& a, const PortRegistry& b) { return a.ports_ == b.ports_; }

private:
    std::vector<Port> ports_;
    std::unordered_map<std::string, int> index_;
};

int encode_port(const std::string& name, const PortRegistry& registry);
const std::string& decode_port(int code, const PortRegistry& registry);

/// Reads `NAME,LON,LAT`.
PortRegistry read_port_registry(std::istream& in);
PortRegistry load_port_registry(const std::string& path);
void write_port_registry(std::ostream& out, const PortRegistry& registry);

inline constexpr std::size_t kClassFeatureCount = 8;
inline constexpr std::size_t kRegFeatureCount = 14;

// ship_type, speed, lon, lat, course, heading, departure_port_code, reported_draught
using ClassFeatures = std::array<double, kClassFeatureCount>;
// ClassFeatures + dest_port_code, dest_lon, dest_lat, hour_of_day, day_of_week, week_of_year
using RegFeatures = std::array<double, kRegFeatureCount>;

const std::array<const char*, kClassFeatureCount>& class_feature_names();
const std::array<const char*, kRegFeatureCount>& reg_feature_names();

/// Absent draught maps to 0, unknown departure port to -1.
ClassFeatures class_features(const AisRecord& record, const PortRegistry& registry);

struct Prediction {
    std::string port_name;
    double time_delta = 0.0;  // minutes
    std::int64_t eta = 0;     // epoch seconds

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

}  // namespace voyagecast
