#ifndef NANOSEG_IMAGE_IO_HPP
#define NANOSEG_IMAGE_IO_HPP

#include "imagecore.hpp"

#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nanoseg {

class ImageIoError : public std::runtime_error {
public:
    enum class Kind { unreadable, multi_channel, unsupported_bit_depth, unwritable, out_of_range };

    ImageIoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Key/value pairs written as PNG tEXt chunks.
using PngText = std::vector<std::pair<std::string, std::string>>;

namespace detail {

/// Raw single-channel samples as stored in a file.
struct RawGray {
    int width = 0;
    int height = 0;
    int bit_depth = 0;  // 8 or 16
    std::vector<std::uint16_t> samples;
};

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageIoError(ImageIoError::Kind::unreadable, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline bool has_png_signature(const std::vector<unsigned char>& bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

struct PngMemoryReader {
    const std::vector<unsigned char>* bytes;
    std::size_t offset;
};

extern "C" inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
    auto* r = static_cast<PngMemoryReader*>(png_get_io_ptr(png));
    if (r->offset + count > r->bytes->size()) png_error(png, "truncated PNG stream");
    std::copy_n(r->bytes->data() + r->offset, count, out);
    r->offset += count;
}

extern "C" inline void png_silent_warning(png_structp, png_const_charp) {}

extern "C" inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

extern "C" inline void png_flush_noop(png_structp) {}

/// Header-level validation happens before libpng decodes anything, so the
/// three failure kinds stay distinguishable.
inline RawGray decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
    // IHDR is always the first chunk: width @16, height @20, depth @24, colour type @25.
    if (bytes.size() < 33)
        throw ImageIoError(ImageIoError::Kind::unreadable, name + ": truncated PNG header");
    const int depth = bytes[24];
    const int color_type = bytes[25];
    if (color_type != PNG_COLOR_TYPE_GRAY)
        throw ImageIoError(ImageIoError::Kind::multi_channel,
                           name + ": PNG is not single-channel grayscale (colour type " +
                               std::to_string(color_type) + ")");
    if (depth != 8 && depth != 16)
        throw ImageIoError(ImageIoError::Kind::unsupported_bit_depth,
                           name + ": unsupported PNG bit depth " + std::to_string(depth));

    RawGray raw;
    std::vector<unsigned char> row;
    PngMemoryReader reader{&bytes, 0};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                             png_silent_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError(ImageIoError::Kind::unreadable, name + ": libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError(ImageIoError::Kind::unreadable, name + ": corrupt PNG data");
    }
    png_set_read_fn(png, &reader, png_read_from_memory);
    png_read_info(png, info);
    raw.width = static_cast<int>(png_get_image_width(png, info));
    raw.height = static_cast<int>(png_get_image_height(png, info));
    raw.bit_depth = depth;
    if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const std::size_t bytes_per_sample = depth == 16 ? 2 : 1;
    row.resize(static_cast<std::size_t>(raw.width) * bytes_per_sample);
    raw.samples.resize(static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.height));
    const int passes = png_get_interlace_type(png, info) != PNG_INTERLACE_NONE ? 7 : 1;
    for (int pass = 0; pass < passes; ++pass) {
        for (int y = 0; y < raw.height; ++y) {
            std::uint16_t* dst = raw.samples.data() + static_cast<std::size_t>(y) * raw.width;
            if (passes > 1)
                for (int x = 0; x < raw.width; ++x) {
                    if (depth == 16) {
                        row[2 * x] = static_cast<unsigned char>(dst[x] >> 8);
                        row[2 * x + 1] = static_cast<unsigned char>(dst[x] & 0xff);
                    } else {
                        row[x] = static_cast<unsigned char>(dst[x]);
                    }
                }
            png_read_row(png, row.data(), nullptr);
            for (int x = 0; x < raw.width; ++x)
                dst[x] = depth == 16
                             ? static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1])
                             : row[x];
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return raw;
}

inline void skip_pnm_space(const std::vector<unsigned char>& b, std::size_t& pos) {
    while (pos < b.size()) {
        if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else if (std::isspace(b[pos])) {
            ++pos;
        } else {
            break;
        }
    }
}

inline long read_pnm_int(const std::vector<unsigned char>& b, std::size_t& pos,
                         const std::string& name) {
    skip_pnm_space(b, pos);
    long v = 0;
    std::size_t start = pos;
    while (pos < b.size() && std::isdigit(b[pos])) v = v * 10 + (b[pos++] - '0');
    if (pos == start)
        throw ImageIoError(ImageIoError::Kind::unreadable, name + ": malformed PNM header");
    return v;
}

inline RawGray decode_pgm(const std::vector<unsigned char>& b, const std::string& name) {
    if (b.size() < 2 || b[0] != 'P')
        throw ImageIoError(ImageIoError::Kind::unreadable, name + ": not a PNG or PGM file");
    if (b[1] == '6' || b[1] == '3' || b[1] == '7')
        throw ImageIoError(ImageIoError::Kind::multi_channel, name + ": PNM file is not grayscale");
    if (b[1] != '5')
        throw ImageIoError(ImageIoError::Kind::unreadable,
                           name + ": only binary PGM (P5) is supported");
    std::size_t pos = 2;
    const long w = read_pnm_int(b, pos, name);
    const long h = read_pnm_int(b, pos, name);
    const long maxval = read_pnm_int(b, pos, name);
    if (maxval != 255 && maxval != 65535)
        throw ImageIoError(ImageIoError::Kind::unsupported_bit_depth,
                           name + ": unsupported PGM maxval " + std::to_string(maxval));
    ++pos;  // single whitespace byte before the raster
    RawGray raw;
    raw.width = static_cast<int>(w);
    raw.height = static_cast<int>(h);
    raw.bit_depth = maxval == 255 ? 8 : 16;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    const std::size_t need = n * (raw.bit_depth == 16 ? 2 : 1);
    if (b.size() < pos + need)
        throw ImageIoError(ImageIoError::Kind::unreadable, name + ": truncated PGM raster");
    raw.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        raw.samples[i] = raw.bit_depth == 16
                             ? static_cast<std::uint16_t>((b[pos + 2 * i] << 8) | b[pos + 2 * i + 1])
                             : b[pos + i];
    return raw;
}

inline RawGray read_raw_gray(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return has_png_signature(bytes) ? decode_png(bytes, path.string())
                                    : decode_pgm(bytes, path.string());
}

inline std::vector<unsigned char> encode_png(const RawGray& raw, const PngText& text) {
    std::vector<unsigned char> out;
    std::vector<png_text> chunks(text.size());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                              png_silent_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw ImageIoError(ImageIoError::Kind::unwritable, "libpng initialisation failed");
    }
    std::vector<unsigned char> row(static_cast<std::size_t>(raw.width) * (raw.bit_depth / 8));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ImageIoError(ImageIoError::Kind::unwritable, "PNG encoding failed");
    }
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(raw.width),
                 static_cast<png_uint_32>(raw.height), raw.bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    for (std::size_t i = 0; i < text.size(); ++i) {
        chunks[i] = png_text{};
        chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
        chunks[i].key = const_cast<char*>(text[i].first.c_str());
        chunks[i].text = const_cast<char*>(text[i].second.c_str());
        chunks[i].text_length = text[i].second.size();
    }
    if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
    png_write_info(png, info);
    for (int y = 0; y < raw.height; ++y) {
        const std::uint16_t* src = raw.samples.data() + static_cast<std::size_t>(y) * raw.width;
        for (int x = 0; x < raw.width; ++x) {
            if (raw.bit_depth == 16) {
                row[2 * x] = static_cast<unsigned char>(src[x] >> 8);
                row[2 * x + 1] = static_cast<unsigned char>(src[x] & 0xff);
            } else {
                row[x] = static_cast<unsigned char>(src[x]);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

inline std::vector<unsigned char> encode_pgm(const RawGray& raw) {
    const std::string header = "P5\n" + std::to_string(raw.width) + " " +
                               std::to_string(raw.height) + "\n" +
                               (raw.bit_depth == 16 ? "65535" : "255") + "\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    for (std::uint16_t s : raw.samples) {
        if (raw.bit_depth == 16) out.push_back(static_cast<unsigned char>(s >> 8));
        out.push_back(static_cast<unsigned char>(s & 0xff));
    }
    return out;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ImageIoError(ImageIoError::Kind::unwritable, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ImageIoError(ImageIoError::Kind::unwritable, "write failed for " + path.string());
}

inline bool wants_pgm(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".pgm";
}

}  // namespace detail

/// Loads an 8- or 16-bit single-channel PNG or binary PGM, dividing by 255 or 65535.
inline Image load_image(const std::filesystem::path& path) {
    const auto raw = detail::read_raw_gray(path);
    const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
    Image img(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.samples.size(); ++i) img[i] = raw.samples[i] / scale;
    return img;
}

/// Saves with round-half-up quantization. Files ending in .pgm are written
/// as binary PGM, everything else as PNG.
inline void save_image(const Image& img, const std::filesystem::path& path, int depth = 16,
                       const PngText& text = {}) {
    if (depth != 8 && depth != 16)
        throw ImageIoError(ImageIoError::Kind::unsupported_bit_depth,
                           "save_image: depth must be 8 or 16");
    detail::RawGray raw{img.width(), img.height(), depth, {}};
    const std::uint32_t max_level = depth == 16 ? 65535u : 255u;
    raw.samples.resize(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        raw.samples[i] = static_cast<std::uint16_t>(quantize(img[i], max_level));
    detail::write_file_bytes(path, detail::wants_pgm(path) ? detail::encode_pgm(raw)
                                                           : detail::encode_png(raw, text));
}

/// Label value == pixel value; 8- or 16-bit grayscale PNG (or PGM).
inline LabelMap load_label_map(const std::filesystem::path& path) {
    const auto raw = detail::read_raw_gray(path);
    LabelMap labels(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.samples.size(); ++i) labels[i] = raw.samples[i];
    return labels;
}

inline void save_label_map(const LabelMap& labels, const std::filesystem::path& path,
                           const PngText& text = {}) {
    detail::RawGray raw{labels.width(), labels.height(), 16, {}};
    raw.samples.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 65535)
            throw ImageIoError(ImageIoError::Kind::out_of_range,
                               "save_label_map: label exceeds 65535");
        raw.samples[i] = static_cast<std::uint16_t>(labels[i]);
    }
    detail::write_file_bytes(path, detail::encode_png(raw, text));
}

/// Reads back the tEXt chunks of a PNG file.
inline PngText read_png_text(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    PngText out;
    if (!detail::has_png_signature(bytes)) return out;
    detail::PngMemoryReader reader{&bytes, 0};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                             detail::png_silent_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        return out;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError(ImageIoError::Kind::unreadable, path.string() + ": corrupt PNG data");
    }
    png_set_read_fn(png, &reader, detail::png_read_from_memory);
    png_read_info(png, info);
    png_textp chunks = nullptr;
    int count = 0;
    png_get_text(png, info, &chunks, &count);
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out.emplace_back(chunks[i].key, std::string(chunks[i].text, chunks[i].text_length));
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace nanoseg

#endif  // NANOSEG_IMAGE_IO_HPP
