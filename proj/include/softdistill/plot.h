#pragma once

#include <string>

namespace softdistill {

// Renders one polyline per distinct value of `series_key`, with points taken
// from the `x_key`/`y_key` columns in file order. Output depends only on the
// CSV bytes, so identical inputs give identical SVG files.
void render_line_chart(const std::string& csv_path, const std::string& series_key,
                       const std::string& x_key, const std::string& y_key,
                       const std::string& out_svg_path);

}  // namespace softdistill
