#include "xfhmm/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "xfhmm/text.hpp"

namespace fs = std::filesystem;

namespace xfhmm::ingest {

namespace {

std::string where(const fs::path& file, std::size_t line) {
    return file.string() + ":" + std::to_string(line);
}

double median_spacing(const std::vector<double>& t) {
    if (t.size() < 2) return 0.0;
    std::vector<double> dt(t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i) dt[i - 1] = t[i] - t[i - 1];
    std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2), dt.end());
    return dt[dt.size() / 2];
}

void check_label(const std::vector<std::string>& label_set, const std::string& label,
                 const std::string& context) {
    if (is_fall_label(label)) return;
    if (std::find(label_set.begin(), label_set.end(), label) == label_set.end()) {
        throw Error(context + ": unknown label '" + label + "'");
    }
}

std::vector<std::string> read_lines(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void classify_subjects(LoadedDataset& out) {
    std::map<std::string, std::pair<bool, bool>> seen;  // subject -> (normal, fall)
    for (const auto& s : out.streams) {
        auto& flags = seen[s.subject_id];
        for (const auto& l : s.labels) {
            if (is_fall_label(l)) flags.second = true;
            else flags.first = true;
        }
    }
    for (const auto& [subject, flags] : seen) {
        if (flags.first && flags.second) {
            out.usable_subjects.push_back(subject);
        } else {
            out.excluded_subjects.push_back(subject);
            out.notes.push_back("subject " + subject + " excluded: " +
                                (flags.first ? "no fall data" : "no normal-activity data"));
        }
    }
}

// ---------------------------------------------------------------------------
// MobiFall: <root>/.../<CODE>_acc_<subject>_<trial>.txt and matching _gyro_
// files; data rows "timestamp_ns,x,y,z" after an optional "@DATA" marker.

TimedTrack read_mobifall_track(const fs::path& file) {
    TimedTrack track;
    const auto lines = read_lines(file);
    bool has_marker = std::any_of(lines.begin(), lines.end(),
                                  [](const std::string& l) { return text::trim(l) == "@DATA"; });
    bool in_data = !has_marker;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        if (line.empty()) continue;
        if (!in_data) {
            in_data = line == "@DATA";
            continue;
        }
        if (line.front() == '#' || line.front() == '@') continue;
        const auto fields = text::split_fields(line);
        if (fields.size() != 4) throw Error(where(file, i + 1) + ": expected 4 fields");
        std::array<double, 4> v{};
        for (std::size_t k = 0; k < 4; ++k) {
            const auto parsed = text::parse_double(fields[k]);
            if (!parsed) throw Error(where(file, i + 1) + ": malformed number '" + std::string(fields[k]) + "'");
            v[k] = *parsed;
        }
        const double t = v[0] * 1e-9;
        if (!track.t.empty() && t <= track.t.back()) continue;  // duplicate stamps occur in the raw logs
        track.t.push_back(t);
        track.values.push_back({v[1], v[2], v[3]});
    }
    if (track.t.empty()) throw Error(file.string() + ": no samples");
    return track;
}

LoadedDataset load_mobifall(const fs::path& root) {
    static const std::regex name_re(R"(([A-Z]{3})_(acc|gyro)_(\d+)_(\d+)\.txt)");
    struct Pair {
        fs::path acc, gyro;
        std::string code;
    };
    std::map<std::tuple<int, std::string, int>, Pair> pairs;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, name_re)) continue;
        auto& p = pairs[{std::stoi(m[3]), m[1].str(), std::stoi(m[4])}];
        p.code = m[1].str();
        (m[2] == "acc" ? p.acc : p.gyro) = entry.path();
    }
    static const std::vector<std::string> label_set = {
        "standing", "walking", "jogging", "jumping", "stairs", "sitting", "car_step_in", "car_step_out"};
    LoadedDataset out;
    for (const auto& [key, p] : pairs) {
        const auto& [subject, code, trial] = key;
        if (p.acc.empty() || p.gyro.empty()) {
            out.notes.push_back("MobiFall " + code + " subject " + std::to_string(subject) + " trial " +
                                std::to_string(trial) + ": missing accel or gyro file, skipped");
            continue;
        }
        const std::string label = mobifall_label(code);
        auto acc = read_mobifall_track(p.acc);
        acc.labels.assign(acc.t.size(), label);
        auto stream = synchronize(acc, read_mobifall_track(p.gyro));
        stream.subject_id = "sub" + std::to_string(subject);
        stream.recording = code + "_" + std::to_string(subject) + "_" + std::to_string(trial);
        stream.accel_unit = "m/s2";
        stream.placement = "trouser pocket";
        stream.label_set = label_set;
        stream.validate();
        out.streams.push_back(std::move(stream));
    }
    return out;
}

// ---------------------------------------------------------------------------
// DLR: <root>/<subject>/<recording>.{csv,txt}; rows
// "t ax ay az gx gy gz [mx my mz] label" (comma or whitespace separated,
// optional header line). Magnetometer columns are ignored.

SensorStream read_dlr_recording(const fs::path& file, const std::string& subject) {
    static const std::vector<std::string> label_set = {
        "standing", "sitting", "lying", "walking", "running", "jumping", "upstairs", "downstairs"};
    SensorStream s;
    s.subject_id = subject;
    s.recording = file.stem().string();
    s.label_set = label_set;
    const auto lines = read_lines(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = text::split_fields(line);
        if (i == 0 && !text::parse_double(fields.front())) continue;  // header
        if (fields.size() != 8 && fields.size() != 11) {
            throw Error(where(file, i + 1) + ": expected 8 or 11 fields, got " + std::to_string(fields.size()));
        }
        std::array<double, 7> v{};
        for (std::size_t k = 0; k < 7; ++k) {
            const auto parsed = text::parse_double(fields[k]);
            if (!parsed) throw Error(where(file, i + 1) + ": malformed number '" + std::string(fields[k]) + "'");
            v[k] = *parsed;
        }
        std::string label;
        try {
            label = dlr_label(fields.back());
        } catch (const Error& e) {
            throw Error(where(file, i + 1) + ": " + e.what());
        }
        if (!s.timestamps.empty() && v[0] <= s.timestamps.back()) {
            throw Error(where(file, i + 1) + ": timestamps must be strictly increasing");
        }
        s.timestamps.push_back(v[0]);
        s.accel.push_back({v[1], v[2], v[3]});
        s.gyro.push_back({v[4], v[5], v[6]});
        s.labels.push_back(std::move(label));
    }
    if (s.timestamps.empty()) throw Error(file.string() + ": no samples");
    const double dt = median_spacing(s.timestamps);
    s.sample_rate_hz = dt > 0 ? 1.0 / dt : 100.0;
    s.validate();
    return s;
}

LoadedDataset load_dlr(const fs::path& root) {
    LoadedDataset out;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".csv" || ext == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const std::string subject = f.parent_path() == root ? f.stem().string() : f.parent_path().filename().string();
        out.streams.push_back(read_dlr_recording(f, subject));
    }
    return out;
}

LoadedDataset load_generic(const fs::path& path) {
    LoadedDataset out;
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    for (const auto& csv : files) {
        auto meta_path = csv;
        meta_path.replace_extension(".meta");
        if (!fs::exists(meta_path)) throw Error(csv.string() + ": missing sidecar metadata " + meta_path.string());
        out.streams.push_back(read_generic_csv(csv, read_metadata(meta_path)));
    }
    return out;
}

}  // namespace

bool SensorStream::has_label(std::string_view label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

void SensorStream::validate() const {
    if (!(sample_rate_hz > 0.0)) throw Error("stream " + recording + ": sample_rate_hz must be positive");
    const auto n = timestamps.size();
    if (accel.size() != n || gyro.size() != n || labels.size() != n) {
        throw Error("stream " + recording + ": per-sample arrays differ in length");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(timestamps[i] > timestamps[i - 1])) {
            throw Error("stream " + recording + ": timestamps not strictly increasing at sample " + std::to_string(i));
        }
    }
    for (const auto& l : labels) check_label(label_set, l, "stream " + recording);
}

SensorStream synchronize(const TimedTrack& accel, const TimedTrack& gyro) {
    if (accel.t.empty() || gyro.t.empty()) throw Error("synchronize: empty track");
    if (accel.t.size() != accel.values.size() || gyro.t.size() != gyro.values.size()) {
        throw Error("synchronize: track timestamps and values differ in length");
    }
    if (!accel.labels.empty() && accel.labels.size() != accel.t.size()) {
        throw Error("synchronize: accel labels differ in length");
    }
    for (const auto* tr : {&accel, &gyro}) {
        for (std::size_t i = 1; i < tr->t.size(); ++i) {
            if (!(tr->t[i] > tr->t[i - 1])) throw Error("synchronize: timestamps not monotone");
        }
    }
    const double g_lo = gyro.t.front();
    const double g_hi = gyro.t.back();
    if (accel.t.back() < g_lo || accel.t.front() > g_hi) {
        throw Error("synchronize: accelerometer and gyroscope tracks do not overlap in time");
    }

    SensorStream out;
    for (std::size_t i = 0; i < accel.t.size(); ++i) {
        const double t = accel.t[i];
        if (t < g_lo || t > g_hi) continue;
        const auto it = std::lower_bound(gyro.t.begin(), gyro.t.end(), t);
        const auto hi = static_cast<std::size_t>(it - gyro.t.begin());
        Vec3 g{};
        if (gyro.t[hi] == t) {
            g = gyro.values[hi];
        } else {
            const std::size_t lo = hi - 1;
            const double w = (t - gyro.t[lo]) / (gyro.t[hi] - gyro.t[lo]);
            for (int k = 0; k < 3; ++k) g[k] = (1.0 - w) * gyro.values[lo][k] + w * gyro.values[hi][k];
        }
        out.timestamps.push_back(t);
        out.accel.push_back(accel.values[i]);
        out.gyro.push_back(g);
        out.labels.push_back(accel.labels.empty() ? std::string() : accel.labels[i]);
    }
    if (out.timestamps.empty()) throw Error("synchronize: no accelerometer sample inside the gyroscope time range");
    const double dt = median_spacing(out.timestamps);
    out.sample_rate_hz = dt > 0.0 ? 1.0 / dt : 1.0;
    return out;
}

Schema parse_schema(std::string_view name) {
    if (name == "generic-csv") return Schema::generic_csv;
    if (name == "dlr") return Schema::dlr;
    if (name == "mobifall") return Schema::mobifall;
    throw Error("unknown dataset schema '" + std::string(name) + "' (expected generic-csv, dlr or mobifall)");
}

std::string_view schema_name(Schema schema) {
    switch (schema) {
        case Schema::generic_csv: return "generic-csv";
        case Schema::dlr: return "dlr";
        case Schema::mobifall: return "mobifall";
    }
    return "?";
}

RecordingMeta read_metadata(const fs::path& path) {
    RecordingMeta meta;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(where(path, i + 1) + ": expected key=value");
        const auto key = text::trim(line.substr(0, eq));
        const auto value = text::trim(line.substr(eq + 1));
        if (key == "subject_id") {
            meta.subject_id = value;
        } else if (key == "sample_rate_hz") {
            const auto rate = text::parse_double(value);
            if (!rate || !(*rate > 0.0)) throw Error(where(path, i + 1) + ": sample_rate_hz must be a positive number");
            meta.sample_rate_hz = *rate;
        } else if (key == "accel_unit") {
            if (value != "m/s2" && value != "g") throw Error(where(path, i + 1) + ": accel_unit must be m/s2 or g");
            meta.accel_unit = value;
        } else if (key == "label_set") {
            meta.label_set.clear();
            for (auto l : text::split(value, ',')) {
                l = text::trim(l);
                if (!l.empty() && !is_fall_label(l)) meta.label_set.emplace_back(l);
            }
        } else if (key == "placement") {
            meta.placement = std::string(value);
        } else {
            throw Error(where(path, i + 1) + ": unknown metadata key '" + std::string(key) + "'");
        }
    }
    if (meta.subject_id.empty()) throw Error(path.string() + ": subject_id missing");
    if (meta.sample_rate_hz <= 0.0) throw Error(path.string() + ": sample_rate_hz missing");
    if (meta.label_set.empty()) throw Error(path.string() + ": label_set missing");
    return meta;
}

void write_metadata(const fs::path& path, const RecordingMeta& meta) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "subject_id=" << meta.subject_id << '\n'
        << "sample_rate_hz=" << text::format_double(meta.sample_rate_hz) << '\n'
        << "accel_unit=" << meta.accel_unit << '\n'
        << "label_set=" << text::join(meta.label_set, ",") << '\n';
    if (meta.placement) out << "placement=" << *meta.placement << '\n';
}

SensorStream read_generic_csv(const fs::path& csv, const RecordingMeta& meta) {
    const auto lines = read_lines(csv);
    if (lines.empty() || text::trim(lines[0]) != "t,ax,ay,az,gx,gy,gz,label") {
        throw Error(where(csv, 1) + ": header must be 't,ax,ay,az,gx,gy,gz,label'");
    }
    SensorStream s;
    s.subject_id = meta.subject_id;
    s.recording = csv.stem().string();
    s.sample_rate_hz = meta.sample_rate_hz;
    s.accel_unit = meta.accel_unit;
    s.placement = meta.placement;
    s.label_set = meta.label_set;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        if (line.empty()) continue;
        const auto fields = text::split(line, ',');
        if (fields.size() != 8) {
            throw Error(where(csv, i + 1) + ": expected 8 fields, got " + std::to_string(fields.size()));
        }
        std::array<double, 7> v{};
        for (std::size_t k = 0; k < 7; ++k) {
            const auto parsed = text::parse_double(fields[k]);
            if (!parsed) throw Error(where(csv, i + 1) + ": malformed number '" + std::string(fields[k]) + "'");
            v[k] = *parsed;
        }
        std::string label(text::trim(fields[7]));
        check_label(s.label_set, label, where(csv, i + 1));
        if (!s.timestamps.empty() && !(v[0] > s.timestamps.back())) {
            throw Error(where(csv, i + 1) + ": timestamps must be strictly increasing");
        }
        s.timestamps.push_back(v[0]);
        s.accel.push_back({v[1], v[2], v[3]});
        s.gyro.push_back({v[4], v[5], v[6]});
        s.labels.push_back(std::move(label));
    }
    s.validate();
    return s;
}

void write_generic_csv(const fs::path& csv, const SensorStream& s) {
    std::ofstream out(csv);
    if (!out) throw Error("cannot write " + csv.string());
    out << "t,ax,ay,az,gx,gy,gz,label\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << text::format_double(s.timestamps[i]);
        for (double v : s.accel[i]) out << ',' << text::format_double(v);
        for (double v : s.gyro[i]) out << ',' << text::format_double(v);
        out << ',' << s.labels[i] << '\n';
    }
}

bool LoadedDataset::is_usable(std::string_view subject) const {
    return std::find(usable_subjects.begin(), usable_subjects.end(), subject) != usable_subjects.end();
}

LoadedDataset load_dataset(const fs::path& path, Schema schema) {
    if (!fs::exists(path)) throw Error("dataset path does not exist: " + path.string());
    LoadedDataset out;
    switch (schema) {
        case Schema::generic_csv: out = load_generic(path); break;
        case Schema::dlr: out = load_dlr(path); break;
        case Schema::mobifall: out = load_mobifall(path); break;
    }
    if (out.streams.empty()) throw Error("no recordings found under " + path.string());
    classify_subjects(out);
    return out;
}

std::string mobifall_label(std::string_view code) {
    static const std::map<std::string, std::string, std::less<>> codes = {
        {"STD", "standing"},     {"WAL", "walking"},      {"JOG", "jogging"}, {"JUM", "jumping"},
        {"STU", "stairs"},       {"STN", "stairs"},       {"SCH", "sitting"}, {"CSI", "car_step_in"},
        {"CSO", "car_step_out"}, {"FOL", "fall"},         {"FKL", "fall"},    {"SDL", "fall"},
        {"BSC", "fall"},
    };
    const auto it = codes.find(code);
    if (it == codes.end()) throw Error("unknown MobiFall activity code '" + std::string(code) + "'");
    return it->second;
}

std::string dlr_label(std::string_view raw) {
    const std::string l = text::lower(text::trim(raw));
    if (l == "falling" || l == "fall") return "fall";
    static const std::set<std::string, std::less<>> known = {
        "standing", "sitting", "lying", "walking", "running", "jumping", "upstairs", "downstairs"};
    if (known.count(l)) return l;
    throw Error("unknown label '" + std::string(raw) + "'");
}

}  // namespace xfhmm::ingest
