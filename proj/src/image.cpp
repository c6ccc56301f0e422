#include "learnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace learnet {

namespace {

uint8_t clamp_byte(long v) { return static_cast<uint8_t>(std::clamp(v, 0l, 255l)); }

// Round half away from zero, the rounding rule for every image kernel here.
uint8_t quantize(double v) { return clamp_byte(std::lround(v)); }

int skip_ppm_space(std::istream& in) {
    int c = in.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#')
            while (c != '\n' && c != EOF) c = in.get();
        c = in.get();
    }
    return c;
}

int read_ppm_int(std::istream& in, const std::string& path) {
    int c = skip_ppm_space(in);
    if (!std::isdigit(c)) throw IoError("cannot decode PPM header of " + path);
    int value = 0;
    while (std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

}  // namespace

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') throw IoError(path + " is not a binary PPM (P6) file");
    const int w = read_ppm_int(in, path);
    const int h = read_ppm_int(in, path);
    const int maxval = read_ppm_int(in, path);
    if (w <= 0 || h <= 0) throw IoError(path + " has invalid dimensions");
    if (maxval != 255) throw IoError(path + " has unsupported maxval " + std::to_string(maxval));
    Image img(w, h);
    in.read(reinterpret_cast<char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.rgb.size()))
        throw IoError(path + " is truncated");
    return img;
}

void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              static_cast<std::streamsize>(img.rgb.size()));
    if (!out) throw IoError("failed writing " + path);
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) throw ValueError("resize target must be positive");
    if (img.width == out_w && img.height == out_h) return img;
    Image out(out_w, out_h);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
                const double bot = (1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
                out.at(x, y, c) = quantize((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

Image rotate_bilinear(const Image& img, double degrees) {
    if (degrees < -180.0 || degrees > 180.0)
        throw ValueError("rotation angle must be within [-180, 180], got " +
                         std::to_string(degrees));
    if (degrees == 0.0) return img;
    Image out(img.width, img.height);
    const double rad = degrees * M_PI / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // Inverse mapping: rotate the destination point back by -angle.
            const double dx = x - cx, dy = y - cy;
            const double fx = cx + cs * dx + sn * dy;
            const double fy = cy - sn * dx + cs * dy;
            if (fx < 0.0 || fy < 0.0 || fx > img.width - 1 || fy > img.height - 1)
                continue;  // black fill
            const int x0 = static_cast<int>(fx);
            const int y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const int y1 = std::min(y0 + 1, img.height - 1);
            const double wx = fx - x0, wy = fy - y0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
                const double bot = (1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
                out.at(x, y, c) = quantize((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

Image hist_equalize(const Image& img) {
    Image out = img;
    const size_t n = static_cast<size_t>(img.width) * img.height;
    for (int c = 0; c < 3; ++c) {
        size_t hist[256] = {0};
        for (size_t i = 0; i < n; ++i) ++hist[img.rgb[i * 3 + c]];
        size_t cdf[256];
        size_t run = 0;
        for (int v = 0; v < 256; ++v) {
            run += hist[v];
            cdf[v] = run;
        }
        size_t cdf_min = 0;
        for (int v = 0; v < 256; ++v)
            if (cdf[v] > 0) {
                cdf_min = cdf[v];
                break;
            }
        if (cdf_min == n) continue;  // constant channel stays as is
        uint8_t lut[256];
        for (int v = 0; v < 256; ++v) {
            const double num = static_cast<double>(cdf[v]) - static_cast<double>(cdf_min);
            const double den = static_cast<double>(n) - static_cast<double>(cdf_min);
            lut[v] = quantize(255.0 * std::max(num, 0.0) / den);
        }
        for (size_t i = 0; i < n; ++i) out.rgb[i * 3 + c] = lut[img.rgb[i * 3 + c]];
    }
    return out;
}

Image hflip(const Image& img) {
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

Tensor image_to_tensor(const Image& img) {
    Tensor t = Tensor::zeros({3, img.height, img.width});
    const size_t plane = static_cast<size_t>(img.width) * img.height;
    for (size_t i = 0; i < plane; ++i)
        for (int c = 0; c < 3; ++c)
            t.v[static_cast<size_t>(c) * plane + i] = img.rgb[i * 3 + c] / 255.0f;
    return t;
}

std::vector<float> image_features(const Image& img) {
    Tensor t = image_to_tensor(img);
    return t.v;
}

Image compose_dynamic_image(const DynamicMap& map, int width, int height) {
    const size_t plane = static_cast<size_t>(width) * height;
    if (map.weights.size() != plane * 3)
        throw ShapeError("dynamic map has " + std::to_string(map.weights.size()) +
                         " weights, expected " + std::to_string(plane * 3) + " for " +
                         std::to_string(width) + "x" + std::to_string(height));
    Image out(width, height);
    for (int c = 0; c < 3; ++c) {
        const float* ch = map.weights.data() + static_cast<size_t>(c) * plane;
        float lo = ch[0], hi = ch[0];
        for (size_t i = 1; i < plane; ++i) {
            lo = std::min(lo, ch[i]);
            hi = std::max(hi, ch[i]);
        }
        for (size_t i = 0; i < plane; ++i) {
            const uint8_t q =
                (hi == lo) ? 128
                           : quantize(255.0 * (static_cast<double>(ch[i]) - lo) / (hi - lo));
            out.rgb[i * 3 + c] = q;
        }
    }
    return out;
}

}  // namespace learnet
