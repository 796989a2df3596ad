#include "scfc/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace scfc {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw ScfcError(ErrorCode::TruncatedFile, path + " ends inside a header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::string index_id(const std::string& images_path, std::size_t index, std::size_t total) {
    std::size_t digits = 1;
    for (std::size_t n = total; n >= 10; n /= 10) ++digits;
    std::string num = std::to_string(index);
    num.insert(0, digits - num.size(), '0');
    return std::filesystem::path(images_path).filename().string() + "#" + num;
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScfcError(ErrorCode::MissingPath, "cannot open " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

std::vector<Image> load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw ScfcError(ErrorCode::MissingPath, "cannot open " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw ScfcError(ErrorCode::MissingPath, "cannot open " + labels_path);

    if (read_u32_be(imgs, images_path) != kIdxImagesMagic)
        throw ScfcError(ErrorCode::BadMagic, images_path + " is not an IDX image file");
    const std::uint32_t count = read_u32_be(imgs, images_path);
    const std::uint32_t rows = read_u32_be(imgs, images_path);
    const std::uint32_t cols = read_u32_be(imgs, images_path);

    if (read_u32_be(labs, labels_path) != kIdxLabelsMagic)
        throw ScfcError(ErrorCode::BadMagic, labels_path + " is not an IDX label file");
    const std::uint32_t label_count = read_u32_be(labs, labels_path);
    if (label_count != count)
        throw ScfcError(ErrorCode::CountMismatch, images_path + " has " + std::to_string(count) +
                                                      " images but " + labels_path + " has " +
                                                      std::to_string(label_count) + " labels");

    std::vector<unsigned char> pixel_row(static_cast<std::size_t>(rows) * cols);
    std::vector<unsigned char> labels(count);
    labs.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count));
    if (labs.gcount() != static_cast<std::streamsize>(count))
        throw ScfcError(ErrorCode::TruncatedFile, labels_path + " label payload is truncated");

    std::vector<Image> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        imgs.read(reinterpret_cast<char*>(pixel_row.data()), static_cast<std::streamsize>(pixel_row.size()));
        if (imgs.gcount() != static_cast<std::streamsize>(pixel_row.size()))
            throw ScfcError(ErrorCode::TruncatedFile,
                            images_path + " image payload is truncated at image " + std::to_string(i));
        Image img(cols, rows);
        for (std::size_t p = 0; p < pixel_row.size(); ++p) img.pixels[p] = pixel_row[p] / 255.0;
        img.id = index_id(images_path, i, count);
        img.label = static_cast<int>(labels[i]);
        img.source_path = images_path;
        out.push_back(std::move(img));
    }
    return out;
}

void save_idx(const std::string& images_path, const std::string& labels_path,
              const std::vector<Image>& images) {
    if (images.empty()) throw ScfcError(ErrorCode::EmptySet, "no images to write");
    const std::size_t rows = images.front().height, cols = images.front().width;
    for (const auto& img : images)
        if (img.width != cols || img.height != rows)
            throw ScfcError(ErrorCode::ShapeMismatch, "IDX requires uniform image dimensions");

    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw ScfcError(ErrorCode::IoFailure, "cannot open " + images_path + " for writing");
    write_u32_be(imgs, kIdxImagesMagic);
    write_u32_be(imgs, static_cast<std::uint32_t>(images.size()));
    write_u32_be(imgs, static_cast<std::uint32_t>(rows));
    write_u32_be(imgs, static_cast<std::uint32_t>(cols));
    for (const auto& img : images) {
        for (double v : img.pixels) {
            const auto byte = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            imgs.put(static_cast<char>(byte));
        }
    }

    std::ofstream labs(labels_path, std::ios::binary);
    if (!labs) throw ScfcError(ErrorCode::IoFailure, "cannot open " + labels_path + " for writing");
    write_u32_be(labs, kIdxLabelsMagic);
    write_u32_be(labs, static_cast<std::uint32_t>(images.size()));
    for (const auto& img : images) labs.put(static_cast<char>(img.label.value_or(0)));
}

// ---------------------------------------------------------------------------
// PGM (binary P5)
// ---------------------------------------------------------------------------

namespace {

// Reads the next header token, skipping whitespace and # comments.
std::string pgm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (tok.empty()) throw ScfcError(ErrorCode::TruncatedFile, path + " ends inside the PGM header");
    return tok;
}

}  // namespace

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScfcError(ErrorCode::MissingPath, "cannot open " + path);

    char magic[2];
    in.read(magic, 2);
    if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5')
        throw ScfcError(ErrorCode::BadMagic, path + " is not a binary (P5) PGM file");

    const std::size_t width = std::stoul(pgm_token(in, path));
    const std::size_t height = std::stoul(pgm_token(in, path));
    const std::size_t maxval = std::stoul(pgm_token(in, path));
    if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
        throw ScfcError(ErrorCode::BadFormat, path + " has invalid PGM dimensions or maxval");

    Image img(width, height);
    img.id = path;
    img.source_path = path;
    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(width * height * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw ScfcError(ErrorCode::TruncatedFile, path + " pixel payload is truncated");

    for (std::size_t i = 0; i < width * height; ++i) {
        const std::size_t v = bytes_per_sample == 1
                                  ? raw[i]
                                  : (static_cast<std::size_t>(raw[2 * i]) << 8) | raw[2 * i + 1];
        img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return img;
}

void save_pgm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScfcError(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double v : img.pixels)
        out.put(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    if (!out) throw ScfcError(ErrorCode::IoFailure, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// PNG (zlib-backed)
// ---------------------------------------------------------------------------

namespace {

constexpr unsigned char kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

void write_chunk(std::ostream& out, const char type[4], const std::vector<unsigned char>& data) {
    write_u32_be(out, static_cast<std::uint32_t>(data.size()));
    out.write(type, 4);
    if (!data.empty()) out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    write_u32_be(out, crc);
}

}  // namespace

Image load_png(const std::string& path) {
    const std::vector<unsigned char> bytes = read_file_bytes(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
        throw ScfcError(ErrorCode::BadMagic, path + " is not a PNG file");

    std::size_t pos = 8;
    std::uint32_t width = 0, height = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<unsigned char> idat;
    bool saw_ihdr = false, saw_iend = false;

    auto be32 = [&](std::size_t at) {
        return (std::uint32_t(bytes[at]) << 24) | (std::uint32_t(bytes[at + 1]) << 16) |
               (std::uint32_t(bytes[at + 2]) << 8) | std::uint32_t(bytes[at + 3]);
    };

    while (pos + 8 <= bytes.size() && !saw_iend) {
        const std::uint32_t length = be32(pos);
        if (pos + 12 + length > bytes.size())
            throw ScfcError(ErrorCode::TruncatedFile, path + " ends inside a PNG chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const unsigned char* data = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (length != 13) throw ScfcError(ErrorCode::BadFormat, path + " IHDR has wrong length");
            width = be32(pos + 8);
            height = be32(pos + 12);
            bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + length);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + length;
    }
    if (!saw_ihdr || !saw_iend || width == 0 || height == 0)
        throw ScfcError(ErrorCode::BadFormat, path + " is missing PNG structure chunks");
    if (bit_depth != 8)
        throw ScfcError(ErrorCode::BadFormat, path + ": only 8-bit PNG is supported");
    if (interlace != 0)
        throw ScfcError(ErrorCode::BadFormat, path + ": interlaced PNG is not supported");

    std::size_t channels;
    switch (color_type) {
        case 0: channels = 1; break;  // grayscale
        case 2: channels = 3; break;  // rgb
        case 4: channels = 2; break;  // gray + alpha
        case 6: channels = 4; break;  // rgba
        default:
            throw ScfcError(ErrorCode::BadFormat,
                            path + ": unsupported PNG color type " + std::to_string(color_type));
    }

    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels;
    std::vector<unsigned char> raw(height * (row_bytes + 1));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    const int rc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || raw_len != raw.size())
        throw ScfcError(ErrorCode::BadFormat, path + ": PNG inflate failed (zlib rc " + std::to_string(rc) + ")");

    // Undo per-row filters in place (raw holds filter byte + row data per scanline).
    std::vector<unsigned char> pixels(height * row_bytes);
    const std::size_t bpp = channels;
    for (std::size_t y = 0; y < height; ++y) {
        const unsigned char filter = raw[y * (row_bytes + 1)];
        const unsigned char* src = &raw[y * (row_bytes + 1) + 1];
        unsigned char* dst = &pixels[y * row_bytes];
        const unsigned char* up = y > 0 ? &pixels[(y - 1) * row_bytes] : nullptr;
        for (std::size_t x = 0; x < row_bytes; ++x) {
            const int left = x >= bpp ? dst[x - bpp] : 0;
            const int above = up ? up[x] : 0;
            const int upleft = (up && x >= bpp) ? up[x - bpp] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += left; break;
                case 2: v += above; break;
                case 3: v += (left + above) / 2; break;
                case 4: v += paeth(left, above, upleft); break;
                default:
                    throw ScfcError(ErrorCode::BadFormat,
                                    path + ": unknown PNG filter " + std::to_string(filter));
            }
            dst[x] = static_cast<unsigned char>(v & 0xff);
        }
    }

    Image img(width, height);
    img.id = path;
    img.source_path = path;
    for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
        const unsigned char* px = &pixels[i * channels];
        double v;
        if (color_type == 0 || color_type == 4)
            v = px[0] / 255.0;
        else
            v = luma601(px[0], px[1], px[2]) / 255.0;
        img.pixels[i] = std::clamp(v, 0.0, 1.0);
    }
    return img;
}

void save_png(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScfcError(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(kPngSignature), 8);

    std::vector<unsigned char> ihdr(13);
    ihdr[0] = static_cast<unsigned char>(img.width >> 24);
    ihdr[1] = static_cast<unsigned char>(img.width >> 16);
    ihdr[2] = static_cast<unsigned char>(img.width >> 8);
    ihdr[3] = static_cast<unsigned char>(img.width);
    ihdr[4] = static_cast<unsigned char>(img.height >> 24);
    ihdr[5] = static_cast<unsigned char>(img.height >> 16);
    ihdr[6] = static_cast<unsigned char>(img.height >> 8);
    ihdr[7] = static_cast<unsigned char>(img.height);
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 0;   // grayscale
    ihdr[10] = 0;  // compression
    ihdr[11] = 0;  // filter
    ihdr[12] = 0;  // no interlace
    write_chunk(out, "IHDR", ihdr);

    std::vector<unsigned char> raw;
    raw.reserve(img.height * (img.width + 1));
    for (std::size_t y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        for (std::size_t x = 0; x < img.width; ++x)
            raw.push_back(
                static_cast<unsigned char>(std::lround(std::clamp(img.at(y, x), 0.0, 1.0) * 255.0)));
    }
    uLongf comp_bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_bound);
    if (compress2(comp.data(), &comp_bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw ScfcError(ErrorCode::IoFailure, "PNG deflate failed for " + path);
    comp.resize(comp_bound);
    write_chunk(out, "IDAT", comp);
    write_chunk(out, "IEND", {});
    if (!out) throw ScfcError(ErrorCode::IoFailure, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// Extension dispatch
// ---------------------------------------------------------------------------

namespace {

std::string lower_extension(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

bool has_image_extension(const std::string& path) {
    const std::string ext = lower_extension(path);
    return ext == ".pgm" || ext == ".png";
}

Image load_image_file(const std::string& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".pgm") return load_pgm(path);
    if (ext == ".png") return load_png(path);
    throw ScfcError(ErrorCode::BadFormat, path + ": unsupported image format (expected .pgm or .png)");
}

}  // namespace scfc
