#include "bootleg/io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

namespace bootleg::io {

std::vector<std::uint8_t> readFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void writeFile(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw Error("short write to " + path.string());
}

std::string readText(const std::filesystem::path& path) {
    auto bytes = readFile(path);
    return {bytes.begin(), bytes.end()};
}

void writeText(const std::filesystem::path& path, std::string_view text) {
    writeFile(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

namespace {

struct PngReadSource {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

void pngRead(png_structp png, png_bytep out, png_size_t n) {
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->bytes.size() - src->pos < n) png_error(png, "PNG data truncated");
    std::copy_n(src->bytes.data() + src->pos, n, out);
    src->pos += n;
}

void pngWrite(png_structp png, png_bytep data, png_size_t n) {
    auto* dst = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    dst->insert(dst->end(), data, data + n);
}

void pngFlush(png_structp) {}

[[noreturn]] void pngFail(png_structp, png_const_charp msg) { throw Error(std::string("PNG: ") + msg); }

void pngWarn(png_structp, png_const_charp) {}

image::RgbImage decodePng(std::span<const std::uint8_t> bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, pngFail, pngWarn);
    if (!png) throw Error("PNG: out of memory");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    PngReadSource src{bytes};
    png_set_read_fn(png, &src, pngRead);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int w = int(png_get_image_width(png, info)), h = int(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3) throw Error("PNG: unexpected channel layout");
    std::vector<std::uint8_t> buf(std::size_t(w) * h * 3);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int r = 0; r < h; ++r) rows[std::size_t(r)] = buf.data() + std::size_t(r) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    image::RgbImage img{h, w, {}};
    img.data.assign(buf.begin(), buf.end());
    return img;
}

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpegFail(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    cinfo->err->format_message(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

image::RgbImage decodeJpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpegFail;
    std::vector<std::uint8_t> buf;
    int w = 0, h = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw Error(std::string("JPEG: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    w = int(cinfo.output_width);
    h = int(cinfo.output_height);
    buf.resize(std::size_t(w) * h * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = buf.data() + std::size_t(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    image::RgbImage img{h, w, {}};
    img.data.assign(buf.begin(), buf.end());
    return img;
}

}  // namespace

image::RgbImage decodeImage(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) return decodePng(bytes);
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decodeJpeg(bytes);
    throw Error("unrecognized image format (expected PNG or JPEG)");
}

image::RgbImage readImage(const std::filesystem::path& path) { return decodeImage(readFile(path)); }

std::vector<std::uint8_t> encodePng(const image::RgbImage& img) {
    if (img.height <= 0 || img.width <= 0) throw Error("cannot encode an empty image");
    std::vector<std::uint8_t> pixels(img.data.size());
    std::transform(img.data.begin(), img.data.end(), pixels.begin(),
                   [](double v) { return std::uint8_t(std::clamp(std::lround(v), 0L, 255L)); });

    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, pngFail, pngWarn);
    if (!png) throw Error("PNG: out of memory");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    png_set_write_fn(png, &out, pngWrite, pngFlush);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < img.height; ++r) png_write_row(png, pixels.data() + std::size_t(r) * img.width * 3);
    png_write_end(png, nullptr);
    return out;
}

void writePng(const std::filesystem::path& path, const image::RgbImage& img) { writeFile(path, encodePng(img)); }

image::RgbImage grayToRgb(const image::GrayImage& gray) {
    image::RgbImage out{gray.height, gray.width, {}};
    out.data.resize(gray.size() * 3);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const double v = std::clamp(gray.data[i], 0.0, 1.0) * 255.0;
        out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = v;
    }
    return out;
}

}  // namespace bootleg::io
