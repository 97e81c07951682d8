#include "nftm/genart.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

#include "nftm/error.hpp"

namespace nftm::genart {

namespace {

constexpr std::uint32_t kAllowedSizes[] = {256, 512, 1024};
constexpr std::size_t kMaxPromptChars = 1000;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix {
 public:
  explicit SplitMix(std::uint64_t state) : state_(state) {}
  std::uint64_t next() { return mix64(state_ += 0x9e3779b97f4a7c15ULL); }
  std::uint32_t below(std::uint32_t n) { return static_cast<std::uint32_t>(next() % n); }

 private:
  std::uint64_t state_;
};

struct Rgb {
  std::int32_t r, g, b;
};

// Lattice value in [0, 255].
std::int64_t lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy, std::uint64_t octave) {
  auto h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL +
                              static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4fULL + octave));
  return static_cast<std::int64_t>(h & 0xff);
}

// Cubic smoothstep on a 16-bit fraction.
std::int64_t smooth(std::int64_t t) {
  auto t2 = (t * t) >> 16;
  auto t3 = (t2 * t) >> 16;
  return 3 * t2 - 2 * t3;
}

std::int64_t lerp(std::int64_t a, std::int64_t b, std::int64_t t) { return a + (((b - a) * t) >> 16); }

// u, v are 16.16 positions in image-relative units ([0, 1) maps to [0, 65536)).
std::int64_t value_noise(std::uint64_t seed, std::int64_t u, std::int64_t v, std::int64_t freq,
                         std::uint64_t octave) {
  auto gx = u * freq;
  auto gy = v * freq;
  auto ix = gx >> 16;
  auto iy = gy >> 16;
  auto sx = smooth(gx & 0xffff);
  auto sy = smooth(gy & 0xffff);
  auto top = lerp(lattice(seed, ix, iy, octave), lattice(seed, ix + 1, iy, octave), sx);
  auto bottom = lerp(lattice(seed, ix, iy + 1, octave), lattice(seed, ix + 1, iy + 1, octave), sx);
  return lerp(top, bottom, sy);
}

void blend(std::uint8_t* px, const Rgb& c, std::int32_t alpha) {
  px[0] = static_cast<std::uint8_t>((c.r * alpha + px[0] * (256 - alpha)) >> 8);
  px[1] = static_cast<std::uint8_t>((c.g * alpha + px[1] * (256 - alpha)) >> 8);
  px[2] = static_cast<std::uint8_t>((c.b * alpha + px[2] * (256 - alpha)) >> 8);
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_warning_ignore(png_structp, png_const_charp) {}

}  // namespace

std::string_view provider_name(ProviderKind kind) {
  return kind == ProviderKind::Remote ? "remote" : "procedural";
}

Prompt Prompt::make(std::string text, std::uint32_t width, std::uint32_t height) {
  auto first = text.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string::npos) throw Error(ErrorCode::EmptyPrompt, "prompt is empty");
  auto last = text.find_last_not_of(" \t\r\n\f\v");
  text = text.substr(first, last - first + 1);
  // Count code points, not bytes.
  auto chars = std::count_if(text.begin(), text.end(),
                             [](char c) { return (static_cast<unsigned char>(c) & 0xc0) != 0x80; });
  if (static_cast<std::size_t>(chars) > kMaxPromptChars) {
    throw Error(ErrorCode::Validation, "prompt exceeds 1000 characters");
  }
  if (width != height || std::find(std::begin(kAllowedSizes), std::end(kAllowedSizes), width) ==
                             std::end(kAllowedSizes)) {
    throw Error(ErrorCode::Validation, "image size must be 256x256, 512x512 or 1024x1024");
  }
  return {std::move(text), width, height};
}

Seed prompt_seed(std::string_view text) {
  auto digest = sha256(text);
  Seed seed{};
  std::copy_n(digest.begin(), seed.size(), seed.begin());
  return seed;
}

Raster render_procedural(const Seed& seed, std::uint32_t width, std::uint32_t height) {
  std::uint64_t s = 0;
  for (auto b : seed) s = (s << 8) | b;
  SplitMix rng(s);

  std::array<Rgb, 5> palette{};
  for (auto& c : palette) {
    c = {static_cast<std::int32_t>(rng.below(256)), static_cast<std::int32_t>(rng.below(256)),
         static_cast<std::int32_t>(rng.below(256))};
  }
  const std::int64_t freq_lo = 3 + rng.below(4);
  const std::int64_t freq_hi = 9 + rng.below(8);

  Raster img{width, height, std::vector<std::uint8_t>(std::size_t{width} * height * 3)};

  // Background: noise value selects a point on the palette gradient.
  for (std::uint32_t y = 0; y < height; ++y) {
    const std::int64_t v = (std::int64_t{y} << 16) / height;
    for (std::uint32_t x = 0; x < width; ++x) {
      const std::int64_t u = (std::int64_t{x} << 16) / width;
      auto n = (2 * value_noise(s, u, v, freq_lo, 1) + value_noise(s, u, v, freq_hi, 2)) / 3;
      n = std::clamp<std::int64_t>(n, 0, 255);
      auto pos = n * 4;  // 0..1020 over 4 gradient segments
      auto seg = std::min<std::int64_t>(pos >> 8, 3);
      auto t = pos - (seg << 8);
      const auto& a = palette[static_cast<std::size_t>(seg)];
      const auto& b = palette[static_cast<std::size_t>(seg + 1)];
      auto* px = &img.rgb[(std::size_t{y} * width + x) * 3];
      px[0] = static_cast<std::uint8_t>(a.r + (((b.r - a.r) * t) >> 8));
      px[1] = static_cast<std::uint8_t>(a.g + (((b.g - a.g) * t) >> 8));
      px[2] = static_cast<std::uint8_t>(a.b + (((b.b - a.b) * t) >> 8));
    }
  }

  // Shapes in 1/4096 image units so they scale with the output size.
  const auto shapes = 4 + rng.below(5);
  for (std::uint32_t i = 0; i < shapes; ++i) {
    const bool disc = rng.below(3) != 0;
    const std::int64_t cx = rng.below(4096), cy = rng.below(4096);
    const std::int64_t rx = 200 + rng.below(900), ry = disc ? rx : 80 + rng.below(500);
    const auto& color = palette[rng.below(static_cast<std::uint32_t>(palette.size()))];
    const auto alpha = static_cast<std::int32_t>(96 + rng.below(105));

    for (std::uint32_t y = 0; y < height; ++y) {
      const std::int64_t py = (std::int64_t{y} * 4096) / height;
      if (py < cy - ry || py > cy + ry) continue;
      for (std::uint32_t x = 0; x < width; ++x) {
        const std::int64_t pxu = (std::int64_t{x} * 4096) / width;
        const auto dx = pxu - cx, dy = py - cy;
        const bool inside = disc ? dx * dx + dy * dy <= rx * rx : (dx >= -rx && dx <= rx);
        if (inside) blend(&img.rgb[(std::size_t{y} * width + x) * 3], color, alpha);
      }
    }
  }
  return img;
}

Bytes encode_png(const Raster& raster) {
  if (raster.rgb.size() != std::size_t{raster.width} * raster.height * 3 || raster.width == 0) {
    throw Error(ErrorCode::Validation, "raster dimensions do not match pixel buffer");
  }
  Bytes out;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, nullptr);
  png_set_IHDR(png, info, raster.width, raster.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_PAETH);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (std::uint32_t y = 0; y < raster.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(raster.rgb.data()) + std::size_t{y} * raster.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Raster decode_png(ByteView data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
    throw Error(ErrorCode::DecodeFailure, std::string("not a PNG image: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  Raster out{image.width, image.height, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(image))};
  if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::DecodeFailure, "PNG decode failed: " + message);
  }
  return out;
}

GeneratedImage ProceduralProvider::generate(const Prompt& prompt) {
  auto seed = prompt_seed(prompt.text);
  auto raster = render_procedural(seed, prompt.width, prompt.height);
  return {encode_png(raster), prompt.width, prompt.height, ProviderKind::Procedural, seed};
}

std::unique_ptr<ImageProvider> make_provider(const GenArtConfig& config,
                                             std::shared_ptr<HttpTransport> transport) {
  if (config.provider == ProviderKind::Procedural) return std::make_unique<ProceduralProvider>();
  if (!transport) transport = make_http_transport();
  return std::make_unique<RemoteProvider>(config.remote, std::move(transport));
}

}  // namespace nftm::genart
