#include "voyagecast/core_model.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "voyagecast/csv.hpp"

namespace voyagecast {

PortRegistry::PortRegistry(std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.name < b.name; });
    ports_.reserve(entries.size());
    for (auto& e : entries) {
        if (e.name.empty()) {
            throw Error("port registry: empty port name");
        }
        const int code = static_cast<int>(ports_.size());
        if (!index_.emplace(e.name, code).second) {
            throw Error("port registry: duplicate port name '" + e.name + "'");
        }
        ports_.push_back(Port{std::move(e.name), code, e.lon, e.lat});
    }
}

int PortRegistry::encode(const std::string& name) const {
    const auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

const std::string& PortRegistry::decode(int code) const { return port(code).name; }

const Port& PortRegistry::port(int code) const {
    if (!contains(code)) {
        throw Error("unknown port code " + std::to_string(code));
    }
    return ports_[static_cast<std::size_t>(code)];
}

int encode_port(const std::string& name, const PortRegistry& registry) { return registry.encode(name); }

const std::string& decode_port(int code, const PortRegistry& registry) { return registry.decode(code); }

PortRegistry read_port_registry(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("port registry: missing header");
    }
    const auto header = csv::split_line(line);
    if (header != std::vector<std::string>{"NAME", "LON", "LAT"}) {
        throw Error("port registry: expected header NAME,LON,LAT");
    }
    std::vector<PortRegistry::Entry> entries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split_line(line);
        const auto where = " at line " + std::to_string(line_no);
        if (fields.size() != 3) {
            throw Error("port registry: expected 3 fields" + where);
        }
        const auto lon = csv::parse_double(fields[1]);
        const auto lat = csv::parse_double(fields[2]);
        if (!lon || !lat) {
            throw Error("port registry: non-numeric coordinate" + where);
        }
        entries.push_back({fields[0], *lon, *lat});
    }
    return PortRegistry(std::move(entries));
}

PortRegistry load_port_registry(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path);
    }
    return read_port_registry(in);
}

void write_port_registry(std::ostream& out, const PortRegistry& registry) {
    out << "NAME,LON,LAT\n";
    for (const auto& p : registry.ports()) {
        out << csv::escape(p.name) << ',' << csv::format_double(p.lon) << ',' << csv::format_double(p.lat)
            << '\n';
    }
}

const std::array<const char*, kClassFeatureCount>& class_feature_names() {
    static const std::array<const char*, kClassFeatureCount> names = {
        "SHIPTYPE", "SPEED", "LON", "LAT", "COURSE", "HEADING", "DEPARTURE_PORT_CODE", "REPORTED_DRAUGHT"};
    return names;
}

const std::array<const char*, kRegFeatureCount>& reg_feature_names() {
    static const std::array<const char*, kRegFeatureCount> names = {
        "SHIPTYPE",  "SPEED",    "LON",      "LAT",         "COURSE",      "HEADING",     "DEPARTURE_PORT_CODE",
        "REPORTED_DRAUGHT", "DEST_PORT_CODE", "DEST_LON", "DEST_LAT", "HOUR_OF_DAY", "DAY_OF_WEEK", "WEEK_OF_YEAR"};
    return names;
}

ClassFeatures class_features(const AisRecord& record, const PortRegistry& registry) {
    return {static_cast<double>(record.ship_type),
            record.speed,
            record.lon,
            record.lat,
            record.course,
            record.heading,
            static_cast<double>(registry.encode(record.departure_port)),
            record.reported_draught.value_or(0.0)};
}

}  // namespace voyagecast
