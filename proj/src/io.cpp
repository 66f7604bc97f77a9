#include "emgsnn/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"

#include "emgsnn/errors.hpp"

namespace emgsnn {

namespace {

using nlohmann::json;

[[noreturn]] void bad_format(const std::filesystem::path& path, const std::string& what) {
    throw StateError("malformed file " + path.string() + ": " + what);
}

void check_version(const json& j, const std::filesystem::path& path) {
    if (!j.contains("version") || !j["version"].is_number_integer() || j["version"] != 1)
        throw StateError("unsupported format version in " + path.string());
}

json parse_json_file(const std::filesystem::path& path, bool pipeline_state) {
    if (pipeline_state && !std::filesystem::exists(path))
        throw StateError("missing file " + path.string() +
                         "; run the producing command first");
    json j = json::parse(read_text(path), nullptr, false);
    if (j.is_discarded()) bad_format(path, "invalid JSON");
    return j;
}

double parse_double(std::string_view token, const std::filesystem::path& path) {
    double v = 0.0;
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        bad_format(path, "expected a number, got '" + std::string(token) + "'");
    return v;
}

long long parse_int(std::string_view token, const std::filesystem::path& path) {
    long long v = 0;
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        bad_format(path, "expected an integer, got '" + std::string(token) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

// Iterate non-empty lines, tolerating a trailing newline.
std::vector<std::string_view> lines_of(const std::string& text) {
    std::vector<std::string_view> out;
    std::string_view rest = text;
    while (!rest.empty()) {
        const std::size_t pos = rest.find('\n');
        std::string_view line = pos == std::string_view::npos ? rest : rest.substr(0, pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) out.push_back(line);
        if (pos == std::string_view::npos) break;
        rest = rest.substr(pos + 1);
    }
    return out;
}

json weights_to_json(const Matrix& w) {
    json arr = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) arr.push_back(w(r, c));
    return arr;
}

Matrix weights_from_json(const json& arr, Eigen::Index rows, Eigen::Index cols,
                         const std::filesystem::path& path) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols)
        bad_format(path, "weight array size mismatch");
    Matrix w(rows, cols);
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = arr[static_cast<std::size_t>(i++)];
    return w;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return std::move(buf).str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

void write_signal(const std::filesystem::path& path, const SignalBuffer& signal) {
    std::string body = "semg,v1,channels=" + std::to_string(signal.channels()) +
                       ",rate=" + format_double(signal.rate_hz) + "\n";
    body.reserve(body.size() + static_cast<std::size_t>(signal.samples.size()) * 18);
    for (Eigen::Index t = 0; t < signal.size(); ++t) {
        for (Eigen::Index c = 0; c < signal.channels(); ++c) {
            if (c > 0) body += ',';
            body += format_double(signal.samples(c, t));
        }
        body += '\n';
    }
    write_text(path, body);
}

SignalBuffer read_signal(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("cannot read " + path.string());
    const std::string text = read_text(path);
    const auto lines = lines_of(text);
    if (lines.empty()) bad_format(path, "empty file");
    const auto head = split(lines[0], ',');
    if (head.size() != 4 || head[0] != "semg" || head[1] != "v1" ||
        head[2].substr(0, 9) != "channels=" || head[3].substr(0, 5) != "rate=")
        bad_format(path, "bad signal header");
    const auto channels = static_cast<Eigen::Index>(parse_int(head[2].substr(9), path));
    if (channels < 1) bad_format(path, "channel count must be positive");
    SignalBuffer out;
    out.rate_hz = parse_double(head[3].substr(5), path);
    const auto steps = static_cast<Eigen::Index>(lines.size()) - 1;
    out.samples = Matrix(channels, steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
        const auto cells = split(lines[static_cast<std::size_t>(t + 1)], ',');
        if (static_cast<Eigen::Index>(cells.size()) != channels)
            bad_format(path, "row width does not match the channel count");
        for (Eigen::Index c = 0; c < channels; ++c) out.samples(c, t) = parse_double(cells[static_cast<std::size_t>(c)], path);
    }
    return out;
}

void write_spikes(const std::filesystem::path& path, const SpikeTensor& spikes) {
    std::string body = "spikes,v1,channels=" + std::to_string(spikes.channels) +
                       ",trains=" + std::to_string(spikes.trains) +
                       ",steps=" + std::to_string(spikes.steps()) + "\n";
    const Eigen::Index width = spikes.bits.rows();
    body.reserve(body.size() + static_cast<std::size_t>((width + 1) * spikes.steps()));
    for (Eigen::Index t = 0; t < spikes.steps(); ++t) {
        for (Eigen::Index r = 0; r < width; ++r) body += spikes.bits(r, t) ? '1' : '0';
        body += '\n';
    }
    write_text(path, body);
}

SpikeTensor read_spikes(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("cannot read " + path.string());
    const std::string text = read_text(path);
    const auto lines = lines_of(text);
    if (lines.empty()) bad_format(path, "empty file");
    const auto head = split(lines[0], ',');
    if (head.size() != 5 || head[0] != "spikes" || head[1] != "v1" ||
        head[2].substr(0, 9) != "channels=" || head[3].substr(0, 7) != "trains=" ||
        head[4].substr(0, 6) != "steps=")
        bad_format(path, "bad spikes header");
    const auto channels = static_cast<Eigen::Index>(parse_int(head[2].substr(9), path));
    const auto trains = static_cast<Eigen::Index>(parse_int(head[3].substr(7), path));
    const auto steps = static_cast<Eigen::Index>(parse_int(head[4].substr(6), path));
    if (channels < 1 || trains < 1 || steps < 0) bad_format(path, "bad spikes dimensions");
    if (static_cast<Eigen::Index>(lines.size()) - 1 != steps)
        bad_format(path, "row count does not match the steps header");
    SpikeTensor out = SpikeTensor::zeros(channels, trains, steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
        const std::string_view row = lines[static_cast<std::size_t>(t + 1)];
        if (static_cast<Eigen::Index>(row.size()) != channels * trains)
            bad_format(path, "row width does not match channels*trains");
        for (Eigen::Index r = 0; r < channels * trains; ++r) {
            const char ch = row[static_cast<std::size_t>(r)];
            if (ch != '0' && ch != '1') bad_format(path, "spike rows must be 0/1");
            out.bits(r, t) = ch == '1' ? 1 : 0;
        }
    }
    return out;
}

void write_labels(const std::filesystem::path& path, const std::vector<LabeledInterval>& labels) {
    std::string body = "onset_sample,offset_sample,class_id\n";
    for (const LabeledInterval& l : labels)
        body += std::to_string(l.begin) + ',' + std::to_string(l.end) + ',' +
                std::to_string(l.class_id) + '\n';
    write_text(path, body);
}

std::vector<LabeledInterval> read_labels(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("cannot read " + path.string());
    const std::string text = read_text(path);
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "onset_sample,offset_sample,class_id")
        bad_format(path, "bad label header");
    std::vector<LabeledInterval> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split(lines[i], ',');
        if (cells.size() != 3) bad_format(path, "label rows need 3 fields");
        LabeledInterval l;
        l.begin = static_cast<Eigen::Index>(parse_int(cells[0], path));
        l.end = static_cast<Eigen::Index>(parse_int(cells[1], path));
        l.class_id = static_cast<int>(parse_int(cells[2], path));
        if (l.end <= l.begin || l.begin < 0) bad_format(path, "label interval must be forward");
        out.push_back(l);
    }
    return out;
}

void write_profile(const std::filesystem::path& path, const CalibrationProfile& profile) {
    json j;
    j["version"] = 1;
    j["alpha"] = profile.alpha;
    j["median_per_channel"] = json::array();
    for (Eigen::Index c = 0; c < profile.median_per_channel.size(); ++c)
        j["median_per_channel"].push_back(profile.median_per_channel(c));
    if (profile.theta_min) j["theta_min"] = *profile.theta_min;
    else j["theta_min"] = nullptr;
    write_text(path, j.dump(2) + "\n");
}

CalibrationProfile read_profile(const std::filesystem::path& path) {
    const json j = parse_json_file(path, true);
    check_version(j, path);
    CalibrationProfile p;
    try {
        p.alpha = j.at("alpha").get<double>();
        const auto& med = j.at("median_per_channel");
        p.median_per_channel = Vector(static_cast<Eigen::Index>(med.size()));
        for (std::size_t i = 0; i < med.size(); ++i)
            p.median_per_channel(static_cast<Eigen::Index>(i)) = med[i].get<double>();
        if (j.contains("theta_min") && !j["theta_min"].is_null())
            p.theta_min = j["theta_min"].get<double>();
    } catch (const json::exception& e) {
        bad_format(path, e.what());
    }
    return p;
}

void write_model(const std::filesystem::path& path, const SnnModel& model) {
    validate_model(model);
    json j;
    j["version"] = 1;
    j["dims"] = {{"H", model.input_dim},
                 {"hidden", model.hidden_dim},
                 {"classes", model.classes},
                 {"p", model.population}};
    j["lif"] = {{"beta", model.lif_beta}, {"u_th", model.lif_u_th}, {"t_sim", model.t_sim}};
    j["solver"] = {{"L", model.bin}, {"t_fix", model.t_fix}};
    j["weights_in"] = weights_to_json(model.weights_in);
    j["weights_out"] = weights_to_json(model.weights_out);
    write_text(path, j.dump() + "\n");
}

SnnModel read_model(const std::filesystem::path& path) {
    const json j = parse_json_file(path, true);
    check_version(j, path);
    SnnModel m;
    try {
        const json& dims = j.at("dims");
        m.input_dim = dims.at("H").get<Eigen::Index>();
        m.hidden_dim = dims.at("hidden").get<Eigen::Index>();
        m.classes = dims.at("classes").get<Eigen::Index>();
        m.population = dims.at("p").get<Eigen::Index>();
        const json& lif = j.at("lif");
        m.lif_beta = lif.at("beta").get<double>();
        m.lif_u_th = lif.at("u_th").get<double>();
        m.t_sim = lif.at("t_sim").get<int>();
        const json& solver = j.at("solver");
        m.bin = solver.at("L").get<Eigen::Index>();
        m.t_fix = solver.at("t_fix").get<Eigen::Index>();
        m.weights_in = weights_from_json(j.at("weights_in"), m.input_dim, m.hidden_dim, path);
        m.weights_out = weights_from_json(j.at("weights_out"), m.hidden_dim, m.output_dim(), path);
    } catch (const json::exception& e) {
        bad_format(path, e.what());
    }
    validate_model(m);
    return m;
}

std::string detection_report_json(const DetectionReport& report) {
    json j;
    j["version"] = 1;
    j["recall"] = report.recall;
    j["precision"] = report.precision;
    j["matches"] = report.matches;
    j["zero_detections"] = report.zero_detections;
    j["onset_offsets"] = report.onset_offsets;
    j["op_counts"] = {{"multiplies", report.op_counts.multiplies},
                      {"additions", report.op_counts.additions},
                      {"active_steps", report.op_counts.active_steps}};
    return j.dump(2) + "\n";
}

std::string energy_report_json(const EnergyReport& report, const EnergyModel& costs) {
    auto stage = [](const StageOps& s) { return json{{"ac", s.ac}, {"mac", s.mac}}; };
    json j;
    j["version"] = 1;
    j["stages"] = {{"encode", stage(report.encode)}, {"detect", stage(report.detect)},
                   {"fc_in", stage(report.fc_in)},   {"lif_hidden", stage(report.lif_hidden)},
                   {"fc_out", stage(report.fc_out)}, {"lif_out", stage(report.lif_out)}};
    j["ac_count"] = report.ac_count();
    j["mac_count"] = report.mac_count();
    j["ac_pj"] = costs.ac_pj;
    j["mac_pj"] = costs.mac_pj;
    j["total_pj"] = report.total_pj(costs);
    return j.dump(2) + "\n";
}

std::string tad_state_json(const TadState& state) {
    json j;
    j["version"] = 1;
    j["channels"] = state.channels;
    j["trains"] = state.trains;
    j["u_mem"] = state.u_mem;
    j["pending_decay_steps"] = state.pending_decay_steps;
    j["in_action"] = state.in_action;
    j["counter"] = state.counter;
    j["onset"] = state.onset;
    j["t"] = state.t;
    j["ops"] = {{"multiplies", state.ops.multiplies},
                {"additions", state.ops.additions},
                {"active_steps", state.ops.active_steps}};
    auto encode_cols = [](const auto& cols) {
        json arr = json::array();
        for (const BitVector& col : cols) {
            std::string row(static_cast<std::size_t>(col.size()), '0');
            for (Eigen::Index i = 0; i < col.size(); ++i)
                if (col(i)) row[static_cast<std::size_t>(i)] = '1';
            arr.push_back(row);
        }
        return arr;
    };
    j["buffer"] = encode_cols(state.buffer);
    j["pre_roll_ring"] = encode_cols(state.pre_roll_ring);
    return j.dump() + "\n";
}

TadState parse_tad_state(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw StateError("malformed detector state: invalid JSON");
    if (!j.contains("version") || j["version"] != 1)
        throw StateError("unsupported detector state version");
    TadState s;
    try {
        s.channels = j.at("channels").get<Eigen::Index>();
        s.trains = j.at("trains").get<Eigen::Index>();
        s.u_mem = j.at("u_mem").get<double>();
        s.pending_decay_steps = j.at("pending_decay_steps").get<std::uint64_t>();
        s.in_action = j.at("in_action").get<bool>();
        s.counter = j.at("counter").get<Eigen::Index>();
        s.onset = j.at("onset").get<Eigen::Index>();
        s.t = j.at("t").get<Eigen::Index>();
        s.ops.multiplies = j.at("ops").at("multiplies").get<std::uint64_t>();
        s.ops.additions = j.at("ops").at("additions").get<std::uint64_t>();
        s.ops.active_steps = j.at("ops").at("active_steps").get<std::uint64_t>();
        auto decode_col = [](const std::string& row) {
            BitVector col(static_cast<Eigen::Index>(row.size()));
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (row[i] != '0' && row[i] != '1')
                    throw StateError("detector state rows must be 0/1");
                col(static_cast<Eigen::Index>(i)) = row[i] == '1' ? 1 : 0;
            }
            return col;
        };
        for (const auto& row : j.at("buffer")) s.buffer.push_back(decode_col(row.get<std::string>()));
        for (const auto& row : j.at("pre_roll_ring"))
            s.pre_roll_ring.push_back(decode_col(row.get<std::string>()));
    } catch (const json::exception& e) {
        throw StateError(std::string("malformed detector state: ") + e.what());
    }
    if (s.counter != static_cast<Eigen::Index>(s.buffer.size()))
        throw StateError("detector state counter does not match its buffer");
    return s;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string file_hash_hex(const std::filesystem::path& path) {
    const std::uint64_t h = fnv1a64(read_text(path));
    char buf[17];
    for (int i = 0; i < 16; ++i)
        buf[15 - i] = "0123456789abcdef"[(h >> (4 * i)) & 0xF];
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace emgsnn
