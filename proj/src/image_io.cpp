#include <cstddef>
#include <cstdio>

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rstrack/image.hpp"

namespace rstrack {

namespace {

double luminance(double r, double g, double b) {
    return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

std::string lower_ext(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

struct FileHandle {
    std::FILE* f = nullptr;
    FileHandle(const std::string& path, const char* mode) { f = std::fopen(path.c_str(), mode); }
    ~FileHandle() {
        if (f) std::fclose(f);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

Image load_png(const std::string& path) {
    FileHandle fh(path, "rb");
    if (!fh.f) throw std::runtime_error("load_image: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("load_image: png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("load_image: png init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_image: malformed PNG " + path);
    }
    png_init_io(png, fh.f);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    std::vector<png_byte> row(std::size_t(w) * channels);
    Image img = make_image(int(h), int(w));
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x) {
            double val;
            if (channels >= 3) {
                val = luminance(row[x * channels], row[x * channels + 1], row[x * channels + 2]);
            } else {
                val = row[x * channels] / 255.0;
            }
            img.px.at(int(y), int(x)) = val;
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    longjmp(mgr->jump, 1);
}

Image load_jpeg(const std::string& path) {
    FileHandle fh(path, "rb");
    if (!fh.f) throw std::runtime_error("load_image: cannot open " + path);

    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("load_image: malformed JPEG " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fh.f);
    jpeg_read_header(&cinfo, TRUE);
    jpeg_start_decompress(&cinfo);

    int w = cinfo.output_width;
    int h = cinfo.output_height;
    int channels = cinfo.output_components;
    std::vector<JSAMPLE> row(std::size_t(w) * channels);
    JSAMPROW rowp = row.data();
    Image img = make_image(h, w);
    while (int(cinfo.output_scanline) < h) {
        int y = cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &rowp, 1);
        for (int x = 0; x < w; ++x) {
            double val;
            if (channels >= 3) {
                val = luminance(row[x * channels], row[x * channels + 1], row[x * channels + 2]);
            } else {
                val = row[x * channels] / 255.0;
            }
            img.px.at(y, x) = val;
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

void skip_pnm_whitespace(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
}

Image load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_image: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2" && magic != "P6")
        throw std::runtime_error("load_image: unsupported PNM magic in " + path);
    skip_pnm_whitespace(in);
    int w = 0, h = 0, maxval = 0;
    in >> w;
    skip_pnm_whitespace(in);
    in >> h;
    skip_pnm_whitespace(in);
    in >> maxval;
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw std::runtime_error("load_image: bad PNM header in " + path);
    Image img = make_image(h, w);
    if (magic == "P2") {
        for (int i = 0; i < h * w; ++i) {
            int v;
            in >> v;
            if (!in) throw std::runtime_error("load_image: truncated PNM " + path);
            img.px.v[i] = double(v) / maxval;
        }
        return img;
    }
    in.get();  // single whitespace after maxval
    int channels = magic == "P6" ? 3 : 1;
    std::vector<unsigned char> data(std::size_t(w) * h * channels);
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size()));
    if (std::size_t(in.gcount()) != data.size())
        throw std::runtime_error("load_image: truncated PNM " + path);
    for (int i = 0; i < h * w; ++i) {
        if (channels == 3) {
            img.px.v[i] =
                luminance(data[i * 3], data[i * 3 + 1], data[i * 3 + 2]) * 255.0 / maxval;
        } else {
            img.px.v[i] = double(data[i]) / maxval;
        }
    }
    return img;
}

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png(const std::string& path, int h, int w, int channels,
               const std::vector<unsigned char>& data) {
    FileHandle fh(path, "wb");
    if (!fh.f) throw std::runtime_error("save_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("save_png: init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("save_png: init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("save_png: write failed for " + path);
    }
    png_init_io(png, fh.f);
    int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, w, h, 8, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(&data[std::size_t(y) * w * channels]));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Image load_image(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "png") return load_png(path);
    if (ext == "jpg" || ext == "jpeg") return load_jpeg(path);
    if (ext == "pgm" || ext == "ppm" || ext == "pnm") return load_pnm(path);
    throw std::runtime_error("load_image: unsupported format for " + path);
}

void save_pgm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_pgm: cannot open " + path);
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<unsigned char> data(img.px.count());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = to_byte(img.px.v[i]);
    out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
}

void save_png_gray(const std::string& path, const Image& img) {
    std::vector<unsigned char> data(img.px.count());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = to_byte(img.px.v[i]);
    write_png(path, img.height(), img.width(), 1, data);
}

void save_png_rgb(const std::string& path, const Grid& r, const Grid& g, const Grid& b) {
    if (!r.same_shape(g) || !r.same_shape(b))
        throw std::invalid_argument("save_png_rgb: channel shape mismatch");
    std::vector<unsigned char> data(r.count() * 3);
    for (std::size_t i = 0; i < r.count(); ++i) {
        data[i * 3] = to_byte(r.v[i]);
        data[i * 3 + 1] = to_byte(g.v[i]);
        data[i * 3 + 2] = to_byte(b.v[i]);
    }
    write_png(path, r.rows, r.cols, 3, data);
}

}  // namespace rstrack
