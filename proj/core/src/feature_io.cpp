#include <fstream>

#include "xfhmm/features.hpp"
#include "xfhmm/text.hpp"

namespace fs = std::filesystem;

namespace xfhmm::features {

namespace {

constexpr std::string_view kHeaderPrefix = "subject,recording,window,level,label";

void write_row(std::ofstream& out, const WindowFeatures& w, std::string_view level, const double* values,
               Eigen::Index dim, Eigen::Index width) {
    out << w.subject_id << ',' << w.recording << ',' << w.index << ',' << level << ',' << w.label;
    for (Eigen::Index i = 0; i < width; ++i) {
        out << ',';
        if (i < dim) out << text::format_double(values[i]);
    }
    out << '\n';
}

}  // namespace

void write_feature_csv(const fs::path& path, const FeatureDataset& data) {
    Eigen::Index width = 0;
    for (const auto& w : data.windows) width = std::max({width, w.summary.size(), w.frames.cols()});
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << kHeaderPrefix;
    for (Eigen::Index i = 0; i < width; ++i) out << ',' << feature_name(static_cast<int>(i));
    out << '\n';
    for (const auto& w : data.windows) {
        write_row(out, w, "window", w.summary.data(), w.summary.size(), width);
        for (Eigen::Index r = 0; r < w.frames.rows(); ++r) {
            const Eigen::VectorXd row = w.frames.row(r).transpose();
            write_row(out, w, "frame", row.data(), row.size(), width);
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

bool is_feature_csv(const fs::path& path) {
    if (!fs::is_regular_file(path)) return false;
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    return header.rfind(kHeaderPrefix, 0) == 0;
}

FeatureDataset read_feature_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (text::trim(line).rfind(kHeaderPrefix, 0) != 0) {
        throw Error(path.string() + ":1: not a feature dataset (header must start with '" + std::string(kHeaderPrefix) + "')");
    }
    const auto width = static_cast<Eigen::Index>(text::split(text::trim(line), ',').size()) - 5;

    FeatureDataset data;
    std::vector<std::vector<double>> frame_rows;
    Eigen::Index frame_dim = -1, window_dim = -1;
    auto close_window = [&] {
        if (data.windows.empty()) return;
        auto& w = data.windows.back();
        w.frames.resize(static_cast<Eigen::Index>(frame_rows.size()), frame_dim < 0 ? 0 : frame_dim);
        for (std::size_t r = 0; r < frame_rows.size(); ++r) {
            for (Eigen::Index c = 0; c < w.frames.cols(); ++c) w.frames(static_cast<Eigen::Index>(r), c) = frame_rows[r][static_cast<std::size_t>(c)];
        }
        frame_rows.clear();
    };

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        const auto where = path.string() + ":" + std::to_string(lineno);
        const auto fields = text::split(trimmed, ',');
        if (static_cast<Eigen::Index>(fields.size()) != width + 5) throw Error(where + ": wrong number of fields");
        std::vector<double> values;
        bool ended = false;
        for (Eigen::Index i = 0; i < width; ++i) {
            const auto cell = text::trim(fields[static_cast<std::size_t>(i + 5)]);
            if (cell.empty()) {
                ended = true;
                continue;
            }
            if (ended) throw Error(where + ": gap inside feature values");
            const auto v = text::parse_double(cell);
            if (!v) throw Error(where + ": malformed number '" + std::string(cell) + "'");
            values.push_back(*v);
        }
        const auto dim = static_cast<Eigen::Index>(values.size());
        const auto index = text::parse_int(fields[2]);
        if (!index) throw Error(where + ": malformed window index");
        const auto level = text::trim(fields[3]);
        if (level == "window") {
            if (window_dim >= 0 && dim != window_dim) throw Error(where + ": inconsistent window feature dimension");
            window_dim = dim;
            close_window();
            WindowFeatures w;
            w.subject_id = text::trim(fields[0]);
            w.recording = text::trim(fields[1]);
            w.index = static_cast<long>(*index);
            w.label = text::trim(fields[4]);
            w.summary = Eigen::Map<const Eigen::VectorXd>(values.data(), dim);
            data.windows.push_back(std::move(w));
        } else if (level == "frame") {
            if (data.windows.empty() || data.windows.back().index != *index ||
                data.windows.back().subject_id != text::trim(fields[0]) ||
                data.windows.back().recording != text::trim(fields[1])) {
                throw Error(where + ": frame row does not follow its window row");
            }
            if (frame_dim >= 0 && dim != frame_dim) throw Error(where + ": inconsistent frame feature dimension");
            frame_dim = dim;
            frame_rows.push_back(std::move(values));
        } else {
            throw Error(where + ": level must be 'window' or 'frame'");
        }
    }
    close_window();
    data.index_activities();
    return data;
}

}  // namespace xfhmm::features
