#include "emo3d/image.hpp"

#include <cstring>
#include <fstream>

#include <zlib.h>

#include "emo3d/error.hpp"
#include "emo3d/hash.hpp"

namespace emo3d {

Image Image::solid(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img;
    img.width = width;
    img.height = height;
    img.channels = 3;
    img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = r;
        img.pixels[i + 1] = g;
        img.pixels[i + 2] = b;
    }
    return img;
}

std::string image_content_hash(const Image& img) {
    std::string header = std::to_string(img.width) + "x" + std::to_string(img.height) + "x" +
                         std::to_string(img.channels) + ":";
    std::vector<std::uint8_t> buf(header.begin(), header.end());
    buf.insert(buf.end(), img.pixels.begin(), img.pixels.end());
    return sha256_hex(buf);
}

double pixel_diff_fraction(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        return 1.0;
    }
    const std::size_t n = static_cast<std::size_t>(a.width) * a.height;
    std::size_t diff = 0;
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t off = p * a.channels;
        for (int c = 0; c < a.channels; ++c) {
            if (a.pixels[off + c] != b.pixels[off + c]) {
                ++diff;
                break;
            }
        }
    }
    return n == 0 ? 0.0 : static_cast<double>(diff) / static_cast<double>(n);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

int color_type_for(int channels) {
    switch (channels) {
        case 1: return 0;
        case 3: return 2;
        case 4: return 6;
        default: return -1;
    }
}

int channels_for(int color_type) {
    switch (color_type) {
        case 0: return 1;
        case 2: return 3;
        case 6: return 4;
        default: return -1;
    }
}

const std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

std::uint8_t paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

} // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.empty()) {
        throw Error(ErrorKind::Image, "encode_png: empty image");
    }
    const int color_type = color_type_for(img.channels);
    if (color_type < 0) {
        throw Error(ErrorKind::Image,
                    "encode_png: unsupported channel count " + std::to_string(img.channels));
    }

    // raw stream: filter byte 0 (None) in front of every row
    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<std::uint8_t> raw;
    raw.reserve((row_bytes + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = img.pixels.data() + static_cast<std::size_t>(y) * row_bytes;
        raw.insert(raw.end(), row, row + row_bytes);
    }

    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(compressed_size);
    if (compress2(compressed.data(), &compressed_size, raw.data(),
                  static_cast<uLong>(raw.size()), 6) != Z_OK) {
        throw Error(ErrorKind::Image, "encode_png: deflate failed");
    }
    compressed.resize(compressed_size);

    std::vector<std::uint8_t> out(kPngSignature, kPngSignature + 8);

    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(img.width));
    put_u32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(static_cast<std::uint8_t>(color_type));
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter
    ihdr.push_back(0); // no interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", compressed);
    append_chunk(out, "IEND", {});
    return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0) {
        throw Error(ErrorKind::Image, "decode_png: not a PNG file");
    }

    Image img;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    bool saw_ihdr = false;
    bool saw_iend = false;
    while (pos + 8 <= bytes.size() && !saw_iend) {
        const std::uint32_t len = get_u32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) {
            throw Error(ErrorKind::Image, "decode_png: truncated chunk");
        }
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* data = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) {
                throw Error(ErrorKind::Image, "decode_png: bad IHDR");
            }
            img.width = static_cast<int>(get_u32(data));
            img.height = static_cast<int>(get_u32(data + 4));
            const int bit_depth = data[8];
            const int color_type = data[9];
            const int interlace = data[12];
            img.channels = channels_for(color_type);
            if (bit_depth != 8 || img.channels < 0 || interlace != 0) {
                throw Error(ErrorKind::Image, "decode_png: unsupported format (need 8-bit gray/RGB/RGBA, no interlace)");
            }
            if (img.width <= 0 || img.height <= 0) {
                throw Error(ErrorKind::Image, "decode_png: zero-size image");
            }
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || idat.empty()) {
        throw Error(ErrorKind::Image, "decode_png: missing IHDR or IDAT");
    }

    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels;
    const std::size_t raw_size = (row_bytes + 1) * img.height;
    std::vector<std::uint8_t> raw(raw_size);
    uLongf dest_len = static_cast<uLongf>(raw_size);
    if (uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        dest_len != raw_size) {
        throw Error(ErrorKind::Image, "decode_png: inflate failed");
    }

    img.pixels.assign(row_bytes * img.height, 0);
    const int bpp = img.channels;
    for (int y = 0; y < img.height; ++y) {
        const std::uint8_t filter = raw[static_cast<std::size_t>(y) * (row_bytes + 1)];
        const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (row_bytes + 1) + 1;
        std::uint8_t* dst = img.pixels.data() + static_cast<std::size_t>(y) * row_bytes;
        const std::uint8_t* prev = y > 0 ? dst - row_bytes : nullptr;
        for (std::size_t x = 0; x < row_bytes; ++x) {
            const int left = x >= static_cast<std::size_t>(bpp) ? dst[x - bpp] : 0;
            const int up = prev ? prev[x] : 0;
            const int up_left = (prev && x >= static_cast<std::size_t>(bpp)) ? prev[x - bpp] : 0;
            int value = src[x];
            switch (filter) {
                case 0: break;
                case 1: value += left; break;
                case 2: value += up; break;
                case 3: value += (left + up) / 2; break;
                case 4: value += paeth(left, up, up_left); break;
                default:
                    throw Error(ErrorKind::Image, "decode_png: unknown filter type");
            }
            dst[x] = static_cast<std::uint8_t>(value & 0xff);
        }
    }
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorKind::Io, "short write to " + path.string());
    }
}

Image read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

} // namespace emo3d
