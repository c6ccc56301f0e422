#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "learnet/rankpool.hpp"
#include "learnet/tensor.hpp"

namespace learnet {

// 8-bit RGB image, interleaved row-major. Doubles as the displayable form of
// a dynamic map.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;  // size = width * height * 3

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0) {}

    uint8_t& at(int x, int y, int c) {
        return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    uint8_t at(int x, int y, int c) const {
        return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
};

// Binary PPM (P6), maxval 255.
Image read_ppm(const std::string& path);
void write_ppm(const Image& img, const std::string& path);

// Bilinear resize with edge clamping; identity sizes return a bit-exact copy.
Image resize_bilinear(const Image& img, int out_w, int out_h);

// Rotation about the image center, bilinear sampling, black outside the
// source; 0 degrees is a bit-exact copy.
Image rotate_bilinear(const Image& img, double degrees);

// Classic per-channel CDF remap; a constant channel is left unchanged.
Image hist_equalize(const Image& img);

Image hflip(const Image& img);

// [3, H, W] float tensor with one batch dim prepended by callers as needed;
// bytes scaled to [0, 1].
Tensor image_to_tensor(const Image& img);

// Channel-major feature vector of one frame, bytes scaled to [0, 1].
std::vector<float> image_features(const Image& img);

// Quantizes a raw dynamic map (channel-major, dim = 3*w*h) to a displayable
// image: per-channel min-max to [0, 255], rounding half away from zero;
// constant channels map to 128.
Image compose_dynamic_image(const DynamicMap& map, int width, int height);

}  // namespace learnet
