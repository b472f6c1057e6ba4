#include "softdistill/plot.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "softdistill/errors.h"
#include "softdistill/text.h"

namespace softdistill {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.emplace_back(trim(std::string_view(line).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::string& path) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ConfigError("plot: " + path + " has no column \"" + name + "\"");
}

double parse_number(const std::string& field, const std::string& path) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size())
        throw ConfigError("plot: " + path + ": non-numeric field \"" + field + "\"");
    return v;
}

// Two-decimal pixel coordinates: deterministic and compact.
std::string px(double v) { return format_double(std::round(v * 100.0) / 100.0); }

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};
constexpr int kPaletteSize = 8;

}  // namespace

void render_line_chart(const std::string& csv_path, const std::string& series_key,
                       const std::string& x_key, const std::string& y_key,
                       const std::string& out_svg_path) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open for reading: " + csv_path);

    std::string line;
    if (!std::getline(in, line)) throw ConfigError("plot: " + csv_path + " is empty");
    const auto header = split_csv_line(line);
    const std::size_t si = column_index(header, series_key, csv_path);
    const std::size_t xi = column_index(header, x_key, csv_path);
    const std::size_t yi = column_index(header, y_key, csv_path);

    std::vector<std::string> series_names;  // first-appearance order
    std::vector<std::vector<std::pair<double, double>>> series_points;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ConfigError("plot: " + csv_path + ": row width does not match header");
        const std::string& name = fields[si];
        std::size_t idx = series_names.size();
        for (std::size_t k = 0; k < series_names.size(); ++k)
            if (series_names[k] == name) idx = k;
        if (idx == series_names.size()) {
            series_names.push_back(name);
            series_points.emplace_back();
        }
        series_points[idx].emplace_back(parse_number(fields[xi], csv_path),
                                        parse_number(fields[yi], csv_path));
    }
    if (series_names.empty()) throw ConfigError("plot: " + csv_path + " has no data rows");

    double xmin = series_points[0][0].first, xmax = xmin;
    double ymin = series_points[0][0].second, ymax = ymin;
    for (const auto& pts : series_points) {
        for (const auto& [x, y] : pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    const double width = 800, height = 500;
    const double left = 70, right = width - 170, top = 20, bottom = height - 50;
    auto map_x = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
    auto map_y = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" "
           "font-family=\"monospace\" font-size=\"12\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
    svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(bottom) << "\" x2=\"" << px(right)
        << "\" y2=\"" << px(bottom) << "\" stroke=\"#000000\"/>\n";
    svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left)
        << "\" y2=\"" << px(bottom) << "\" stroke=\"#000000\"/>\n";

    for (int t = 0; t <= 4; ++t) {
        const double fx = xmin + (xmax - xmin) * t / 4.0;
        const double fy = ymin + (ymax - ymin) * t / 4.0;
        const double tx = map_x(fx);
        const double ty = map_y(fy);
        svg << "<line x1=\"" << px(tx) << "\" y1=\"" << px(bottom) << "\" x2=\"" << px(tx)
            << "\" y2=\"" << px(bottom + 5) << "\" stroke=\"#000000\"/>\n";
        svg << "<text x=\"" << px(tx) << "\" y=\"" << px(bottom + 18)
            << "\" text-anchor=\"middle\">" << format_double(std::round(fx * 1e4) / 1e4)
            << "</text>\n";
        svg << "<line x1=\"" << px(left - 5) << "\" y1=\"" << px(ty) << "\" x2=\"" << px(left)
            << "\" y2=\"" << px(ty) << "\" stroke=\"#000000\"/>\n";
        svg << "<text x=\"" << px(left - 8) << "\" y=\"" << px(ty + 4)
            << "\" text-anchor=\"end\">" << format_double(std::round(fy * 1e4) / 1e4)
            << "</text>\n";
    }
    svg << "<text x=\"" << px((left + right) / 2) << "\" y=\"" << px(height - 12)
        << "\" text-anchor=\"middle\">" << x_key << "</text>\n";
    svg << "<text x=\"16\" y=\"" << px((top + bottom) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << px((top + bottom) / 2)
        << ")\">" << y_key << "</text>\n";

    for (std::size_t s = 0; s < series_names.size(); ++s) {
        const char* color = kPalette[s % kPaletteSize];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (const auto& [x, y] : series_points[s]) {
            if (!first) svg << ' ';
            svg << px(map_x(x)) << ',' << px(map_y(y));
            first = false;
        }
        svg << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(s) + 8;
        svg << "<line x1=\"" << px(right + 10) << "\" y1=\"" << px(ly) << "\" x2=\""
            << px(right + 30) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        svg << "<text x=\"" << px(right + 35) << "\" y=\"" << px(ly + 4) << "\">" << series_key
            << "=" << series_names[s] << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(out_svg_path);
    if (!out) throw IoError("cannot open for writing: " + out_svg_path);
    out << svg.str();
    out.close();
    if (!out) throw IoError("write failed: " + out_svg_path);
}

}  // namespace softdistill
