#include "facedet/detection_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace facedet {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
    return lines;
}

[[noreturn]] void bad_line(const std::string& origin, std::size_t line, std::size_t block,
                           const std::string& what) {
    throw ParseError(origin + ": " + what + " at line " + std::to_string(line + 1) +
                     " (block starting at line " + std::to_string(block + 1) + ")");
}

double parse_double(const std::string& tok, const std::string& origin, std::size_t line,
                    std::size_t block) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v))
        bad_line(origin, line, block, "non-numeric field '" + tok + "'");
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    return fields;
}

Box parse_box(const std::vector<std::string>& f, const std::string& origin, std::size_t line,
              std::size_t block) {
    const double x = parse_double(f[0], origin, line, block);
    const double y = parse_double(f[1], origin, line, block);
    const double w = parse_double(f[2], origin, line, block);
    const double h = parse_double(f[3], origin, line, block);
    if (w <= 0.0 || h <= 0.0) bad_line(origin, line, block, "non-positive box size");
    return Box(x, y, x + w, y + h);
}

// Shared block walker; `row` consumes one record line.
template <typename RowFn, typename BlockFn>
void parse_blocks(const std::string& text, const std::string& origin, RowFn&& row,
                  BlockFn&& block_start) {
    const auto lines = split_lines(text);
    std::size_t idx = 0;
    while (idx < lines.size()) {
        if (lines[idx].empty()) {
            bool rest_empty = true;
            for (std::size_t j = idx; j < lines.size(); ++j)
                if (!lines[j].empty()) rest_empty = false;
            if (rest_empty) return;
            throw ParseError(origin + ": empty image id at line " + std::to_string(idx + 1));
        }
        const std::size_t block = idx;
        const std::string& image_id = lines[idx];
        ++idx;
        if (idx >= lines.size()) bad_line(origin, idx, block, "missing count line");
        std::size_t n = 0;
        {
            const std::string& tok = lines[idx];
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
            if (ec != std::errc{} || ptr != tok.data() + tok.size())
                bad_line(origin, idx, block, "malformed count line '" + tok + "'");
        }
        ++idx;
        block_start(image_id, block);
        for (std::size_t k = 0; k < n; ++k, ++idx) {
            if (idx >= lines.size())
                bad_line(origin, idx, block, "short block, expected " + std::to_string(n) +
                                                 " record lines");
            row(image_id, lines[idx], idx, block);
        }
    }
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out << content;
        out.flush();
        if (!out) throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

DetectionMap parse_detections(const std::string& text, const std::string& origin) {
    DetectionMap out;
    parse_blocks(
        text, origin,
        [&](const std::string& id, const std::string& line, std::size_t li, std::size_t bl) {
            const auto f = split_fields(line);
            if (f.size() != 5) bad_line(origin, li, bl, "expected 'x y w h score'");
            Box box{0, 0, 1, 1};
            try {
                box = parse_box(f, origin, li, bl);
            } catch (const std::invalid_argument& e) {
                bad_line(origin, li, bl, e.what());
            }
            const double score = parse_double(f[4], origin, li, bl);
            if (score < 0.0 || score > 1.0) bad_line(origin, li, bl, "score outside [0, 1]");
            out[id].push_back({box, score});
        },
        [&](const std::string& id, std::size_t bl) {
            if (out.count(id))
                throw ParseError(origin + ": duplicate image id '" + id + "' at line " +
                                 std::to_string(bl + 1));
            out[id];  // materialize empty-detection images
        });
    return out;
}

DetectionMap read_detections(const std::string& path) {
    return parse_detections(read_text_file(path), path);
}

std::string format_detections(const DetectionMap& dets) {
    std::string out;
    char buf[192];
    for (const auto& [id, list] : dets) {
        out += id + "\n" + std::to_string(list.size()) + "\n";
        for (const auto& d : list) {
            std::snprintf(buf, sizeof buf, "%.3f %.3f %.3f %.3f %.6f\n", d.box.x1, d.box.y1,
                          d.box.width(), d.box.height(), d.score);
            out += buf;
        }
    }
    return out;
}

void write_detections(const DetectionMap& dets, const std::string& path) {
    write_text_atomic(path, format_detections(dets));
}

std::vector<GroundTruthImage> parse_ground_truth(const std::string& text,
                                                 const std::string& origin) {
    std::vector<GroundTruthImage> out;
    parse_blocks(
        text, origin,
        [&](const std::string&, const std::string& line, std::size_t li, std::size_t bl) {
            const auto f = split_fields(line);
            if (f.size() != 5) bad_line(origin, li, bl, "expected 'x y w h tag'");
            Box box{0, 0, 1, 1};
            try {
                box = parse_box(f, origin, li, bl);
            } catch (const std::invalid_argument& e) {
                bad_line(origin, li, bl, e.what());
            }
            Difficulty tag{};
            try {
                tag = difficulty_from_string(f[4]);
            } catch (const std::invalid_argument& e) {
                bad_line(origin, li, bl, e.what());
            }
            out.back().boxes.push_back(box);
            out.back().tags.push_back(tag);
        },
        [&](const std::string& id, std::size_t bl) {
            for (const auto& img : out)
                if (img.image_id == id)
                    throw ParseError(origin + ": duplicate image id '" + id + "' at line " +
                                     std::to_string(bl + 1));
            out.push_back({id, {}, {}});
        });
    return out;
}

std::vector<GroundTruthImage> read_ground_truth(const std::string& path) {
    return parse_ground_truth(read_text_file(path), path);
}

std::string format_ground_truth(std::span<const GroundTruthImage> images) {
    std::string out;
    char buf[192];
    for (const auto& img : images) {
        img.validate();
        out += img.image_id + "\n" + std::to_string(img.boxes.size()) + "\n";
        for (std::size_t i = 0; i < img.boxes.size(); ++i) {
            const Box& b = img.boxes[i];
            std::snprintf(buf, sizeof buf, "%.3f %.3f %.3f %.3f %s\n", b.x1, b.y1, b.width(),
                          b.height(), to_string(img.tags[i]));
            out += buf;
        }
    }
    return out;
}

void write_ground_truth(std::span<const GroundTruthImage> images, const std::string& path) {
    write_text_atomic(path, format_ground_truth(images));
}

std::string format_report(const EvalResult& result) {
    nlohmann::ordered_json j;
    j["easy"] = result.easy.ap;
    j["medium"] = result.medium.ap;
    j["hard"] = result.hard.ap;
    j["n_images"] = result.n_images;
    return j.dump() + "\n";
}

std::string format_curve_tsv(const PRCurve& curve) {
    std::string out;
    char buf[96];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f\n", p.threshold, p.recall, p.precision);
        out += buf;
    }
    return out;
}

}  // namespace facedet
