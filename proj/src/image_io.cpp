#include "pcwlad/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include <png.h>
#include <tiffio.h>

#include "pcwlad/errors.hpp"

namespace pcwlad {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// ---------------------------------------------------------------- PGM

int pgm_next_int(std::istream& in) {
    // skips whitespace and '#' comments per the netpbm grammar
    while (true) {
        int c = in.peek();
        if (c == EOF)
            throw FormatError("pgm: unexpected end of header");
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value))
        throw FormatError("pgm: malformed header integer");
    return value;
}

Raster load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    char magic[2];
    in.read(magic, 2);
    const bool binary = magic[1] == '5';
    if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2'))
        throw FormatError("pgm: unsupported magic in " + path);

    const int w = pgm_next_int(in);
    const int h = pgm_next_int(in);
    const int maxval = pgm_next_int(in);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw FormatError("pgm: bad dimensions or maxval in " + path);

    Raster r(w, h);
    const double scale = 1.0 / maxval;
    if (!binary) {
        for (double& v : r.samples())
            v = pgm_next_int(in) * scale;
        return r;
    }
    in.get(); // single whitespace byte after maxval
    const std::size_t n = r.size();
    if (maxval < 256) {
        std::vector<std::uint8_t> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (!in)
            throw FormatError("pgm: truncated pixel data in " + path);
        auto dst = r.samples();
        for (std::size_t i = 0; i < n; ++i)
            dst[i] = buf[i] * scale;
    } else {
        std::vector<std::uint8_t> buf(n * 2); // big-endian 16 bit
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in)
            throw FormatError("pgm: truncated pixel data in " + path);
        auto dst = r.samples();
        for (std::size_t i = 0; i < n; ++i)
            dst[i] = ((buf[2 * i] << 8) | buf[2 * i + 1]) * scale;
    }
    return r;
}

// ---------------------------------------------------------------- PNG

Raster load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw IoError("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: allocation failure");
    }
    std::vector<std::vector<png_byte>> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png: failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    color = png_get_color_type(png, info);
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3)
        throw FormatError("png: unsupported channel count in " + path);

    rows.assign(h, std::vector<png_byte>(png_get_rowbytes(png, info)));
    std::vector<png_bytep> row_ptrs(h);
    for (png_uint_32 y = 0; y < h; ++y)
        row_ptrs[y] = rows[y].data();
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Raster r(static_cast<int>(w), static_cast<int>(h));
    const double maxval = bit_depth == 16 ? 65535.0 : 255.0;
    for (png_uint_32 y = 0; y < h; ++y) {
        const png_byte* src = rows[y].data();
        double* dst = r.row(static_cast<int>(y));
        for (png_uint_32 x = 0; x < w; ++x) {
            double sum = 0.0;
            for (int c = 0; c < channels; ++c) {
                if (bit_depth == 16) {
                    sum += (src[0] << 8) | src[1]; // PNG 16-bit is big-endian
                    src += 2;
                } else {
                    sum += *src++;
                }
            }
            dst[x] = sum / (channels * maxval);
        }
    }
    return r;
}

// ---------------------------------------------------------------- TIFF

Raster load_tiff(const std::string& path) {
    TIFFSetErrorHandler(nullptr);
    TIFFSetWarningHandler(nullptr);
    TIFF* tif = TIFFOpen(path.c_str(), "r");
    if (!tif)
        throw IoError("cannot open " + path);

    std::uint32_t w = 0, h = 0;
    std::uint16_t bps = 8, spp = 1, planar = PLANARCONFIG_CONTIG, sample_format = SAMPLEFORMAT_UINT;
    TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &w);
    TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &h);
    TIFFGetFieldDefaulted(tif, TIFFTAG_BITSPERSAMPLE, &bps);
    TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif, TIFFTAG_PLANARCONFIG, &planar);
    TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLEFORMAT, &sample_format);

    const bool supported = w > 0 && h > 0 && (bps == 8 || bps == 16) &&
                           (spp == 1 || spp == 3) && planar == PLANARCONFIG_CONTIG &&
                           sample_format == SAMPLEFORMAT_UINT;
    if (!supported) {
        TIFFClose(tif);
        throw FormatError("tiff: unsupported layout in " + path);
    }

    Raster r(static_cast<int>(w), static_cast<int>(h));
    std::vector<std::uint8_t> scanline(TIFFScanlineSize(tif));
    const double maxval = bps == 16 ? 65535.0 : 255.0;
    for (std::uint32_t y = 0; y < h; ++y) {
        if (TIFFReadScanline(tif, scanline.data(), y) < 0) {
            TIFFClose(tif);
            throw FormatError("tiff: failed to read scanline in " + path);
        }
        double* dst = r.row(static_cast<int>(y));
        if (bps == 8) {
            const std::uint8_t* src = scanline.data();
            for (std::uint32_t x = 0; x < w; ++x) {
                double sum = 0.0;
                for (int c = 0; c < spp; ++c)
                    sum += *src++;
                dst[x] = sum / (spp * maxval);
            }
        } else {
            const std::uint16_t* src = reinterpret_cast<const std::uint16_t*>(scanline.data());
            for (std::uint32_t x = 0; x < w; ++x) {
                double sum = 0.0;
                for (int c = 0; c < spp; ++c)
                    sum += *src++;
                dst[x] = sum / (spp * maxval);
            }
        }
    }
    TIFFClose(tif);
    return r;
}

} // namespace

Raster load_gray(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe)
        throw IoError("cannot open " + path);
    unsigned char magic[4] = {0, 0, 0, 0};
    probe.read(reinterpret_cast<char*>(magic), 4);
    probe.close();

    if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return load_png(path);
    if ((magic[0] == 'I' && magic[1] == 'I') || (magic[0] == 'M' && magic[1] == 'M'))
        return load_tiff(path);
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2'))
        return load_pgm(path);
    if (magic[0] == 'P' && magic[1] == 'C' && magic[2] == 'W' && magic[3] == '1')
        return load_pcw1(path);
    throw FormatError("unsupported image format: " + path);
}

void save_png16(const Raster& r, const std::string& path, bool normalize) {
    if (r.empty())
        throw ParamError("save_png16: empty raster");
    double lo = 0.0, hi = 1.0;
    if (normalize) {
        auto s = r.samples();
        lo = *std::min_element(s.begin(), s.end());
        hi = *std::max_element(s.begin(), s.end());
        if (hi - lo < 1e-12)
            hi = lo + 1.0;
    }
    const double scale = 65535.0 / (hi - lo);

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw IoError("cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: failed to write " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, r.width(), r.height(), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(r.width()) * 2);
    for (int y = 0; y < r.height(); ++y) {
        const double* src = r.row(y);
        for (int x = 0; x < r.width(); ++x) {
            const double v = std::clamp((src[x] - lo) * scale, 0.0, 65535.0);
            const auto q = static_cast<std::uint16_t>(std::lround(v));
            row[2 * x] = static_cast<png_byte>(q >> 8);
            row[2 * x + 1] = static_cast<png_byte>(q & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_pcw1(const Raster& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    const std::uint32_t header[3] = {static_cast<std::uint32_t>(r.width()),
                                     static_cast<std::uint32_t>(r.height()), 0u};
    out.write("PCW1", 4);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<float> buf(r.size());
    auto src = r.samples();
    for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] = static_cast<float>(src[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out)
        throw IoError("failed to write " + path);
}

Raster load_pcw1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    char magic[4];
    std::uint32_t header[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || std::memcmp(magic, "PCW1", 4) != 0)
        throw FormatError("pcw1: bad header in " + path);
    const std::uint32_t w = header[0], h = header[1];
    if (w == 0 || h == 0 || w > 1u << 20 || h > 1u << 20)
        throw FormatError("pcw1: implausible dimensions in " + path);
    Raster r(static_cast<int>(w), static_cast<int>(h));
    std::vector<float> buf(r.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in)
        throw FormatError("pcw1: truncated samples in " + path);
    auto dst = r.samples();
    for (std::size_t i = 0; i < buf.size(); ++i)
        dst[i] = buf[i];
    return r;
}

} // namespace pcwlad
