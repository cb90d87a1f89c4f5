#include "scbm/svg_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace scbm::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmtg(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series) {
    if (series.empty()) throw std::invalid_argument("line_chart: no series");
    const double W = 640, H = 420, ml = 64, mr = 160, mt = 40, mb = 48;
    const double pw = W - ml - mr, ph = H - mt - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.mean[i] - s.stddev[i]);
            ymax = std::max(ymax, s.mean[i] + s.stddev[i]);
        }
    if (xmax <= xmin) xmax = xmin + 1.0;
    const double ypad = std::max(0.02, (ymax - ymin) * 0.08);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double v) { return mt + ph - (v - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
       << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
       << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
       << mt + ph << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10
       << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << mt + ph / 2
       << ")\">" << y_label << "</text>\n";

    for (int tick = 0; tick <= 4; ++tick) {
        const double yv = ymin + (ymax - ymin) * tick / 4.0;
        os << "<text x=\"" << ml - 6 << "\" y=\"" << sy(yv) + 4
           << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(yv) << "</text>\n";
        os << "<line x1=\"" << ml << "\" y1=\"" << sy(yv) << "\" x2=\"" << ml + pw << "\" y2=\""
           << sy(yv) << "\" stroke=\"#dddddd\"/>\n";
    }

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % 8];
        if (s.x.size() > 1) {
            os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                os << fmt(sx(s.x[i])) << "," << fmt(sy(s.mean[i] + s.stddev[i])) << " ";
            for (std::size_t i = s.x.size(); i-- > 0;)
                os << fmt(sx(s.x[i])) << "," << fmt(sy(s.mean[i] - s.stddev[i])) << " ";
            os << "\"/>\n";
        }
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << fmt(sx(s.x[i])) << "," << fmt(sy(s.mean[i])) << " ";
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << "<circle cx=\"" << fmt(sx(s.x[i])) << "\" cy=\"" << fmt(sy(s.mean[i]))
               << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = mt + 16 + 18 * static_cast<double>(si);
        os << "<rect x=\"" << ml + pw + 14 << "\" y=\"" << ly - 9
           << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
        os << "<text x=\"" << ml + pw + 30 << "\" y=\"" << ly + 2 << "\" font-size=\"11\">"
           << s.label << "</text>\n";
    }

    for (std::size_t i = 0; i < series[0].x.size(); ++i)
        os << "<text x=\"" << sx(series[0].x[i]) << "\" y=\"" << mt + ph + 16
           << "\" text-anchor=\"middle\" font-size=\"10\">" << fmtg(series[0].x[i]) << "</text>\n";

    os << "</svg>\n";
    return os.str();
}

std::string image_grid(const std::vector<const Tensor*>& images,
                       const std::vector<std::string>& captions, std::size_t columns) {
    if (images.empty()) throw std::invalid_argument("image_grid: no images");
    if (captions.size() != images.size())
        throw std::invalid_argument("image_grid: caption count mismatch");
    const Tensor& first = *images[0];
    if (first.ndim() != 3) throw std::invalid_argument("image_grid: images must be (H,W,C)");
    const std::size_t h2 = first.dim(0) / 2, w2 = first.dim(1) / 2;
    const double cell_w = static_cast<double>(w2) * 2 + 16;
    const double cell_h = static_cast<double>(h2) * 2 + 34;
    const std::size_t rows = (images.size() + columns - 1) / columns;
    const double W = cell_w * static_cast<double>(columns) + 16;
    const double H = cell_h * static_cast<double>(rows) + 16;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
       << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    char buf[160];
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Tensor& img = *images[n];
        const double ox = 16 + cell_w * static_cast<double>(n % columns);
        const double oy = 16 + cell_h * static_cast<double>(n / columns);
        const std::size_t hh = img.dim(0), ww = img.dim(1), cc = img.dim(2);
        for (std::size_t y = 0; y + 1 < hh; y += 2)
            for (std::size_t x = 0; x + 1 < ww; x += 2) {
                double v = 0.0;  // 2x2 average of channel 0
                v += img[(y * ww + x) * cc];
                v += img[(y * ww + x + 1) * cc];
                v += img[((y + 1) * ww + x) * cc];
                v += img[((y + 1) * ww + x + 1) * cc];
                v /= 4.0;
                const int g = 255 - static_cast<int>(std::lround(v * 255.0));
                std::snprintf(buf, sizeof buf,
                              "<rect x=\"%.0f\" y=\"%.0f\" width=\"2\" height=\"2\" fill=\"rgb(%d,%d,%d)\"/>\n",
                              ox + static_cast<double>(x), oy + static_cast<double>(y), g, g, g);
                os << buf;
            }
        os << "<text x=\"" << ox << "\" y=\"" << oy + static_cast<double>(h2) * 2 + 14
           << "\" font-size=\"10\">" << captions[n] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace scbm::svg
