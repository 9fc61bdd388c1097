#include "assetgen/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <png.h>

#include "assetgen/errors.hpp"

namespace assetgen
{
    double srgb_to_linear(double c)
    {
        return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }

    double linear_to_srgb(double c)
    {
        c = std::clamp(c, 0.0, 1.0);
        return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
    }

    uint8_t encode_srgb8(double linear)
    {
        return static_cast<uint8_t>(std::lround(linear_to_srgb(linear) * 255.0));
    }

    double decode_srgb8(uint8_t code)
    {
        return srgb_to_linear(code / 255.0);
    }

    namespace
    {
        template <int Channels, typename Pixel>
        void write_pfm_impl(const std::filesystem::path& path, const Image<Pixel>& image, auto&& get)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
            {
                throw DataError("cannot write PFM: " + path.string());
            }
            out << (Channels == 3 ? "PF" : "Pf") << "\n" << image.width << " " << image.height << "\n-1.0\n";
            std::vector<float> row(static_cast<size_t>(image.width) * Channels);
            for (int y = image.height - 1; y >= 0; --y)
            {
                for (int x = 0; x < image.width; ++x)
                {
                    get(image.at(x, y), &row[static_cast<size_t>(x) * Channels]);
                }
                out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
            }
            if (!out)
            {
                throw DataError("failed writing PFM: " + path.string());
            }
        }

        struct PfmData
        {
            int width = 0;
            int height = 0;
            int channels = 0;
            std::vector<float> values; // top row first
        };

        PfmData read_pfm(const std::filesystem::path& path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw DataError("cannot open PFM: " + path.string());
            }
            std::string magic;
            PfmData pfm;
            double scale = 0.0;
            in >> magic >> pfm.width >> pfm.height >> scale;
            in.get();
            if (!in || (magic != "PF" && magic != "Pf") || pfm.width <= 0 || pfm.height <= 0)
            {
                throw DataError("malformed PFM header: " + path.string());
            }
            if (scale > 0.0)
            {
                throw DataError("big-endian PFM is not supported: " + path.string());
            }
            pfm.channels = magic == "PF" ? 3 : 1;
            const size_t row = static_cast<size_t>(pfm.width) * pfm.channels;
            pfm.values.resize(row * pfm.height);
            for (int y = pfm.height - 1; y >= 0; --y)
            {
                in.read(reinterpret_cast<char*>(&pfm.values[row * y]), static_cast<std::streamsize>(row * sizeof(float)));
            }
            if (!in)
            {
                throw DataError("truncated PFM data: " + path.string());
            }
            return pfm;
        }

        struct PngFile
        {
            FILE* fp = nullptr;
            ~PngFile()
            {
                if (fp)
                {
                    std::fclose(fp);
                }
            }
        };

        void write_png(const std::filesystem::path& path, int width, int height, int channels, const std::vector<uint8_t>& bytes)
        {
            PngFile file;
            file.fp = std::fopen(path.string().c_str(), "wb");
            if (!file.fp)
            {
                throw DataError("cannot write PNG: " + path.string());
            }
            png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
            png_infop info = png ? png_create_info_struct(png) : nullptr;
            if (!png || !info)
            {
                png_destroy_write_struct(&png, &info);
                throw DataError("libpng initialisation failed");
            }
            if (setjmp(png_jmpbuf(png)))
            {
                png_destroy_write_struct(&png, &info);
                throw DataError("libpng failed writing " + path.string());
            }
            png_init_io(png, file.fp);
            png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                PNG_FILTER_TYPE_DEFAULT);
            png_write_info(png, info);
            for (int y = 0; y < height; ++y)
            {
                png_write_row(png, const_cast<png_bytep>(&bytes[static_cast<size_t>(y) * width * channels]));
            }
            png_write_end(png, nullptr);
            png_destroy_write_struct(&png, &info);
        }

        // Returns 8-bit samples with the requested channel count (1 or 3).
        std::vector<uint8_t> read_png(const std::filesystem::path& path, int channels, int& width, int& height)
        {
            PngFile file;
            file.fp = std::fopen(path.string().c_str(), "rb");
            if (!file.fp)
            {
                throw DataError("cannot open PNG: " + path.string());
            }
            png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
            png_infop info = png ? png_create_info_struct(png) : nullptr;
            if (!png || !info)
            {
                png_destroy_read_struct(&png, &info, nullptr);
                throw DataError("libpng initialisation failed");
            }
            if (setjmp(png_jmpbuf(png)))
            {
                png_destroy_read_struct(&png, &info, nullptr);
                throw DataError("malformed PNG: " + path.string());
            }
            png_init_io(png, file.fp);
            png_read_info(png, info);
            width = static_cast<int>(png_get_image_width(png, info));
            height = static_cast<int>(png_get_image_height(png, info));
            const int color_type = png_get_color_type(png, info);
            if (png_get_bit_depth(png, info) == 16)
            {
                png_set_strip_16(png);
            }
            if (color_type == PNG_COLOR_TYPE_PALETTE)
            {
                png_set_palette_to_rgb(png);
            }
            if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
            {
                png_set_expand_gray_1_2_4_to_8(png);
            }
            png_set_strip_alpha(png);
            const bool is_gray = color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA;
            if (channels == 3 && is_gray)
            {
                png_set_gray_to_rgb(png);
            }
            if (channels == 1 && !is_gray)
            {
                png_set_rgb_to_gray_fixed(png, 1, -1, -1);
            }
            png_read_update_info(png, info);
            std::vector<uint8_t> bytes(static_cast<size_t>(width) * height * channels);
            for (int y = 0; y < height; ++y)
            {
                png_read_row(png, &bytes[static_cast<size_t>(y) * width * channels], nullptr);
            }
            png_read_end(png, nullptr);
            png_destroy_read_struct(&png, &info, nullptr);
            return bytes;
        }
    } // namespace

    void write_pfm(const std::filesystem::path& path, const ImageRGB& image)
    {
        write_pfm_impl<3>(path, image, [](const Vec3& v, float* out) {
            out[0] = static_cast<float>(v.x());
            out[1] = static_cast<float>(v.y());
            out[2] = static_cast<float>(v.z());
        });
    }

    void write_pfm(const std::filesystem::path& path, const ImageF& image)
    {
        write_pfm_impl<1>(path, image, [](double v, float* out) { out[0] = static_cast<float>(v); });
    }

    ImageRGB read_pfm_rgb(const std::filesystem::path& path)
    {
        const PfmData pfm = read_pfm(path);
        if (pfm.channels != 3)
        {
            throw DataError("expected a colour PFM: " + path.string());
        }
        ImageRGB image(pfm.width, pfm.height, Vec3::Zero());
        for (size_t i = 0; i < image.size(); ++i)
        {
            image[i] = Vec3(pfm.values[3 * i], pfm.values[3 * i + 1], pfm.values[3 * i + 2]);
        }
        return image;
    }

    ImageF read_pfm_gray(const std::filesystem::path& path)
    {
        const PfmData pfm = read_pfm(path);
        if (pfm.channels != 1)
        {
            throw DataError("expected a grayscale PFM: " + path.string());
        }
        ImageF image(pfm.width, pfm.height, 0.0);
        for (size_t i = 0; i < image.size(); ++i)
        {
            image[i] = pfm.values[i];
        }
        return image;
    }

    void write_png_gray(const std::filesystem::path& path, const ImageF& image)
    {
        std::vector<uint8_t> bytes(image.size());
        for (size_t i = 0; i < image.size(); ++i)
        {
            bytes[i] = static_cast<uint8_t>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
        }
        write_png(path, image.width, image.height, 1, bytes);
    }

    void write_png_srgb(const std::filesystem::path& path, const ImageRGB& image)
    {
        std::vector<uint8_t> bytes(image.size() * 3);
        for (size_t i = 0; i < image.size(); ++i)
        {
            for (int k = 0; k < 3; ++k)
            {
                bytes[3 * i + k] = encode_srgb8(image[i][k]);
            }
        }
        write_png(path, image.width, image.height, 3, bytes);
    }

    ImageF read_png_gray(const std::filesystem::path& path)
    {
        int w = 0;
        int h = 0;
        const auto bytes = read_png(path, 1, w, h);
        ImageF image(w, h, 0.0);
        for (size_t i = 0; i < image.size(); ++i)
        {
            image[i] = bytes[i] / 255.0;
        }
        return image;
    }

    ImageRGB read_png_srgb(const std::filesystem::path& path)
    {
        int w = 0;
        int h = 0;
        const auto bytes = read_png(path, 3, w, h);
        ImageRGB image(w, h, Vec3::Zero());
        for (size_t i = 0; i < image.size(); ++i)
        {
            image[i] = Vec3(decode_srgb8(bytes[3 * i]), decode_srgb8(bytes[3 * i + 1]), decode_srgb8(bytes[3 * i + 2]));
        }
        return image;
    }
} // namespace assetgen
