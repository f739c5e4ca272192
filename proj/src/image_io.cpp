#include "regbench/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace regbench {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Raster read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed");
    }
    std::vector<png_bytep> row_pointers;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG " + path);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_bit_depth(png, info) == 16) png_set_swap(png);  // file order is big-endian
    png_read_update_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int channels = png_get_channels(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw UnsupportedBandCount("PNG " + path + " has " + std::to_string(channels) +
                                   " channels; expected 1 or 3");
    }

    const std::size_t row_bytes = png_get_rowbytes(png, info);
    pixels.resize(row_bytes * height);
    row_pointers.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) row_pointers[y] = pixels.data() + y * row_bytes;
    png_read_image(png, row_pointers.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Raster raster;
    raster.width = static_cast<int>(width);
    raster.height = static_cast<int>(height);
    raster.bands = channels;
    raster.bit_depth = bit_depth;
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    raster.samples.resize(count);
    if (bit_depth == 16) {
        const std::uint16_t* src = reinterpret_cast<const std::uint16_t*>(pixels.data());
        std::copy(src, src + count, raster.samples.begin());
    } else {
        for (std::size_t i = 0; i < count; ++i) raster.samples[i] = pixels[i];
    }
    return raster;
}

// Minimal baseline TIFF: uncompressed strips, chunky planar layout,
// 1 or 3 samples per pixel at 8 or 16 bits.
class TiffParser {
public:
    explicit TiffParser(std::vector<unsigned char> bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {
        if (bytes_.size() < 8) fail("truncated header");
        if (bytes_[0] == 'I' && bytes_[1] == 'I')
            little_endian_ = true;
        else if (bytes_[0] == 'M' && bytes_[1] == 'M')
            little_endian_ = false;
        else
            fail("bad byte-order mark");
        if (u16(2) != 42) fail("bad magic");
    }

    Raster parse() {
        const std::uint32_t ifd = u32(4);
        if (ifd + 2 > bytes_.size()) fail("bad IFD offset");
        const int entries = u16(ifd);

        std::uint32_t width = 0, height = 0, rows_per_strip = 0xffffffffu;
        std::uint32_t compression = 1, planar = 1, sample_format = 1;
        std::uint32_t samples_per_pixel = 1;
        std::vector<std::uint32_t> bits, strip_offsets, strip_counts;

        for (int e = 0; e < entries; ++e) {
            const std::uint32_t base = ifd + 2 + 12 * static_cast<std::uint32_t>(e);
            if (base + 12 > bytes_.size()) fail("truncated IFD");
            const int tag = u16(base);
            switch (tag) {
                case 256: width = entry_value(base); break;
                case 257: height = entry_value(base); break;
                case 258: bits = entry_values(base); break;
                case 259: compression = entry_value(base); break;
                case 273: strip_offsets = entry_values(base); break;
                case 277: samples_per_pixel = entry_value(base); break;
                case 278: rows_per_strip = entry_value(base); break;
                case 279: strip_counts = entry_values(base); break;
                case 284: planar = entry_value(base); break;
                case 339: sample_format = entry_value(base); break;
                default: break;
            }
        }

        if (width == 0 || height == 0) fail("missing dimensions");
        if (compression != 1) fail("only uncompressed TIFF is supported");
        if (planar != 1) fail("only chunky planar configuration is supported");
        if (sample_format != 1) fail("only unsigned integer samples are supported");
        if (samples_per_pixel != 1 && samples_per_pixel != 3)
            throw UnsupportedBandCount("TIFF " + path_ + " has " +
                                       std::to_string(samples_per_pixel) +
                                       " bands; expected 1 or 3");
        std::uint32_t bit_depth = bits.empty() ? 8 : bits[0];
        for (std::uint32_t b : bits)
            if (b != bit_depth) fail("mixed bits-per-sample");
        if (bit_depth != 8 && bit_depth != 16) fail("only 8- and 16-bit samples are supported");
        if (strip_offsets.empty()) fail("missing strip offsets");

        Raster raster;
        raster.width = static_cast<int>(width);
        raster.height = static_cast<int>(height);
        raster.bands = static_cast<int>(samples_per_pixel);
        raster.bit_depth = static_cast<int>(bit_depth);
        raster.samples.resize(static_cast<std::size_t>(width) * height * samples_per_pixel);

        const std::size_t bytes_per_sample = bit_depth / 8;
        const std::size_t row_samples = static_cast<std::size_t>(width) * samples_per_pixel;
        std::size_t out = 0;
        std::uint32_t row = 0;
        for (std::size_t s = 0; s < strip_offsets.size() && row < height; ++s) {
            const std::uint32_t strip_rows =
                std::min<std::uint32_t>(rows_per_strip, height - row);
            std::size_t offset = strip_offsets[s];
            const std::size_t need = row_samples * strip_rows * bytes_per_sample;
            if (s < strip_counts.size() && strip_counts[s] < need) fail("short strip");
            if (offset + need > bytes_.size()) fail("strip out of range");
            for (std::size_t i = 0; i < row_samples * strip_rows; ++i) {
                raster.samples[out++] =
                    bit_depth == 8 ? bytes_[offset + i]
                                   : u16(static_cast<std::uint32_t>(offset + 2 * i));
            }
            row += strip_rows;
        }
        if (row < height) fail("strips cover fewer rows than the image height");
        return raster;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw IoError("TIFF " + path_ + ": " + why);
    }

    std::uint16_t u16(std::uint32_t off) const {
        if (off + 2 > bytes_.size()) fail("read past end");
        return little_endian_
                   ? static_cast<std::uint16_t>(bytes_[off] | (bytes_[off + 1] << 8))
                   : static_cast<std::uint16_t>((bytes_[off] << 8) | bytes_[off + 1]);
    }

    std::uint32_t u32(std::uint32_t off) const {
        if (off + 4 > bytes_.size()) fail("read past end");
        if (little_endian_)
            return bytes_[off] | (bytes_[off + 1] << 8) | (bytes_[off + 2] << 16) |
                   (static_cast<std::uint32_t>(bytes_[off + 3]) << 24);
        return (static_cast<std::uint32_t>(bytes_[off]) << 24) | (bytes_[off + 1] << 16) |
               (bytes_[off + 2] << 8) | bytes_[off + 3];
    }

    std::uint32_t type_size(int type) const {
        switch (type) {
            case 1: case 2: return 1;  // BYTE, ASCII
            case 3: return 2;          // SHORT
            case 4: return 4;          // LONG
            default: fail("unsupported IFD entry type " + std::to_string(type));
        }
    }

    std::uint32_t entry_value(std::uint32_t base) const {
        const auto values = entry_values(base);
        if (values.empty()) fail("empty IFD entry");
        return values[0];
    }

    std::vector<std::uint32_t> entry_values(std::uint32_t base) const {
        const int type = u16(base + 2);
        const std::uint32_t count = u32(base + 4);
        const std::uint32_t size = type_size(type);
        const std::uint32_t total = size * count;
        const std::uint32_t value_off = total <= 4 ? base + 8 : u32(base + 8);
        std::vector<std::uint32_t> values(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            const std::uint32_t off = value_off + i * size;
            switch (type) {
                case 1: case 2:
                    if (off >= bytes_.size()) fail("read past end");
                    values[i] = bytes_[off];
                    break;
                case 3: values[i] = u16(off); break;
                case 4: values[i] = u32(off); break;
            }
        }
        return values;
    }

    std::vector<unsigned char> bytes_;
    std::string path_;
    bool little_endian_ = false;
};

}  // namespace

Raster read_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    unsigned char magic[4] = {};
    in.read(reinterpret_cast<char*>(magic), 4);
    if (in.gcount() < 4) throw IoError("file too short: " + path);

    static const unsigned char png_sig[4] = {0x89, 'P', 'N', 'G'};
    if (std::memcmp(magic, png_sig, 4) == 0) {
        in.close();
        return read_png(path);
    }
    if ((magic[0] == 'I' && magic[1] == 'I') || (magic[0] == 'M' && magic[1] == 'M')) {
        in.seekg(0);
        std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
        return TiffParser(std::move(bytes), path).parse();
    }
    throw IoError("unrecognized image format: " + path);
}

GrayImage read_gray(const std::string& path) { return to_gray(read_raster(path)); }

void write_gray_png(const std::string& path, const GrayImage& img) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }
    std::vector<png_byte> row(img.width);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG " + path);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const float v = img.at(x, y);
            row[x] = static_cast<png_byte>(std::clamp(std::lround(v), 0L, 255L));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

}  // namespace regbench
