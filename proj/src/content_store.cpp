#include "nftm/content_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <json.hpp>

#include "nftm/error.hpp"

namespace nftm::content {

namespace {

constexpr std::string_view kAlphabet =
    "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
constexpr std::uint8_t kSha256Code = 0x12;
constexpr std::uint8_t kSha256Length = 0x20;

class MemoryLog final : public ObjectLog {
 public:
  std::uint64_t append(ByteView record) override {
    auto offset = buf_.size();
    buf_.insert(buf_.end(), record.begin(), record.end());
    return offset;
  }
  Bytes read(std::uint64_t offset, std::size_t length) const override {
    return {buf_.begin() + static_cast<std::ptrdiff_t>(offset),
            buf_.begin() + static_cast<std::ptrdiff_t>(offset + length)};
  }
  Bytes read_all() const override { return buf_; }

 private:
  Bytes buf_;
};

class FileLog final : public ObjectLog {
 public:
  explicit FileLog(std::filesystem::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::Io, "cannot open object log " + path_.string());
    struct stat st {};
    ::fstat(fd_, &st);
    size_ = static_cast<std::uint64_t>(st.st_size);
  }
  ~FileLog() override { ::close(fd_); }
  FileLog(const FileLog&) = delete;
  FileLog& operator=(const FileLog&) = delete;

  std::uint64_t append(ByteView record) override {
    auto offset = size_;
    std::size_t written = 0;
    while (written < record.size()) {
      auto n = ::write(fd_, record.data() + written, record.size() - written);
      if (n < 0) throw Error(ErrorCode::Io, "write failed on " + path_.string());
      written += static_cast<std::size_t>(n);
    }
    ::fdatasync(fd_);
    size_ += record.size();
    return offset;
  }

  Bytes read(std::uint64_t offset, std::size_t length) const override {
    Bytes out(length);
    std::size_t got = 0;
    while (got < length) {
      auto n = ::pread(fd_, out.data() + got, length - got, static_cast<off_t>(offset + got));
      if (n <= 0) throw Error(ErrorCode::IntegrityFailure, "short read from " + path_.string());
      got += static_cast<std::size_t>(n);
    }
    return out;
  }

  Bytes read_all() const override { return read(0, size_); }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::uint64_t size_ = 0;
};

Bytes encode_record(ByteView content, std::string_view media_type) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(4 + media_type.size() + content.size()));
  w.str(media_type);
  w.raw(content);
  return std::move(w).take();
}

}  // namespace

std::string base58_encode(ByteView data) {
  std::size_t zeros = 0;
  while (zeros < data.size() && data[zeros] == 0) ++zeros;

  // Base-58 digits, least significant first.
  std::vector<std::uint8_t> digits;
  digits.reserve(data.size() * 138 / 100 + 1);
  for (std::size_t i = zeros; i < data.size(); ++i) {
    std::uint32_t carry = data[i];
    for (auto& d : digits) {
      carry += static_cast<std::uint32_t>(d) << 8;
      d = static_cast<std::uint8_t>(carry % 58);
      carry /= 58;
    }
    while (carry > 0) {
      digits.push_back(static_cast<std::uint8_t>(carry % 58));
      carry /= 58;
    }
  }

  std::string out(zeros, '1');
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) out.push_back(kAlphabet[*it]);
  return out;
}

Bytes base58_decode(std::string_view text) {
  std::size_t ones = 0;
  while (ones < text.size() && text[ones] == '1') ++ones;

  std::vector<std::uint8_t> bytes;  // little-endian base-256
  for (std::size_t i = ones; i < text.size(); ++i) {
    auto pos = kAlphabet.find(text[i]);
    if (pos == std::string_view::npos) throw Error(ErrorCode::Validation, "invalid base58 character");
    std::uint32_t carry = static_cast<std::uint32_t>(pos);
    for (auto& b : bytes) {
      carry += static_cast<std::uint32_t>(b) * 58;
      b = static_cast<std::uint8_t>(carry & 0xff);
      carry >>= 8;
    }
    while (carry > 0) {
      bytes.push_back(static_cast<std::uint8_t>(carry & 0xff));
      carry >>= 8;
    }
  }

  Bytes out(ones, 0);
  out.insert(out.end(), bytes.rbegin(), bytes.rend());
  return out;
}

Cid Cid::parse(std::string_view text) {
  auto raw = base58_decode(text);
  if (raw.size() != 34 || raw[0] != kSha256Code || raw[1] != kSha256Length) {
    throw Error(ErrorCode::Validation, "not a sha2-256 multihash CID: " + std::string(text));
  }
  // Canonical text only: base58 has no alternate spellings, but re-encode to be exact.
  return Cid(base58_encode(raw));
}

Cid Cid::of(ByteView content) {
  auto digest = sha256(content);
  std::array<std::uint8_t, 34> mh{};
  mh[0] = kSha256Code;
  mh[1] = kSha256Length;
  std::copy(digest.begin(), digest.end(), mh.begin() + 2);
  return Cid(base58_encode(mh));
}

Hash32 Cid::digest() const {
  auto raw = base58_decode(text_);
  Hash32 out{};
  std::copy(raw.begin() + 2, raw.end(), out.begin());
  return out;
}

std::string MetadataDocument::to_canonical_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["description"] = description;
  j["price"] = price;
  j["image"] = image;
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("metadata is not valid UTF-8: ") + e.what());
  }
}

MetadataDocument MetadataDocument::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("metadata is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Validation, "metadata must be a JSON object");
  static constexpr std::array<std::string_view, 4> kKeys = {"name", "description", "price", "image"};
  for (auto key : kKeys) {
    if (!j.contains(key)) {
      throw Error(ErrorCode::Validation, "metadata is missing key \"" + std::string(key) + "\"");
    }
  }
  if (j.size() != kKeys.size()) throw Error(ErrorCode::Validation, "metadata has extra keys");
  if (!j["name"].is_string() || !j["description"].is_string() || !j["image"].is_string()) {
    throw Error(ErrorCode::Validation, "metadata name, description and image must be strings");
  }
  if (!j["price"].is_number_unsigned()) {
    throw Error(ErrorCode::Validation, "metadata price must be an unsigned integer");
  }
  return {j["name"].get<std::string>(), j["description"].get<std::string>(),
          j["price"].get<std::uint64_t>(), j["image"].get<std::string>()};
}

ContentStore::ContentStore(std::shared_ptr<const Clock> clock)
    : ContentStore(std::move(clock), std::make_unique<MemoryLog>()) {}

ContentStore::ContentStore(std::shared_ptr<const Clock> clock, std::unique_ptr<ObjectLog> log)
    : clock_(std::move(clock)), log_(std::move(log)) {}

std::unique_ptr<ContentStore> ContentStore::open(const std::filesystem::path& log_path,
                                                 std::shared_ptr<const Clock> clock) {
  auto log = std::make_unique<FileLog>(log_path);
  auto all = log->read_all();
  std::unique_ptr<ContentStore> store(new ContentStore(std::move(clock), std::move(log)));

  auto loaded_at = store->clock_->now();
  ByteReader r(all);
  try {
    while (!r.done()) {
      auto record_start = all.size() - r.remaining();
      auto rest = r.u32();
      auto body = r.raw(rest);
      ByteReader br(body);
      auto media = br.str();
      auto header = 4 + 4 + media.size();
      auto content = body.subspan(4 + media.size());
      auto cid = Cid::of(content);
      store->index_.try_emplace(cid.str(), IndexEntry{record_start + header, content.size(),
                                                      std::move(media), loaded_at});
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptData,
                "object log " + log_path.string() + " is truncated or malformed: " + e.what());
  }
  return store;
}

Cid ContentStore::pin_bytes(ByteView content, std::string_view media_type) {
  auto cid = Cid::of(content);
  std::unique_lock lock(mu_);
  if (index_.contains(cid.str())) return cid;
  auto record = encode_record(content, media_type);
  auto offset = log_->append(record);
  index_.emplace(cid.str(), IndexEntry{offset + 8 + media_type.size(), content.size(),
                                       std::string(media_type), clock_->now()});
  return cid;
}

Cid ContentStore::pin_json(const MetadataDocument& doc) {
  auto json = doc.to_canonical_json();
  return pin_bytes(as_bytes(json), kJsonMediaType);
}

Fetched ContentStore::fetch(const Cid& cid) const {
  IndexEntry entry;
  {
    std::shared_lock lock(mu_);
    auto it = index_.find(cid.str());
    if (it == index_.end()) throw Error(ErrorCode::NotFound, "no object pinned under " + cid.str());
    entry = it->second;
  }
  auto bytes = log_->read(entry.content_offset, entry.content_size);
  if (Cid::of(bytes) != cid) {
    throw Error(ErrorCode::IntegrityFailure, "stored bytes no longer hash to " + cid.str());
  }
  return {std::move(bytes), std::move(entry.media_type)};
}

MetadataDocument ContentStore::fetch_metadata(const Cid& cid) const {
  auto obj = fetch(cid);
  std::string_view text(reinterpret_cast<const char*>(obj.bytes.data()), obj.bytes.size());
  auto doc = MetadataDocument::from_json(text);
  if (doc.to_canonical_json() != text) {
    throw Error(ErrorCode::Validation, "metadata " + cid.str() + " is not in canonical form");
  }
  return doc;
}

bool ContentStore::contains(const Cid& cid) const {
  std::shared_lock lock(mu_);
  return index_.contains(cid.str());
}

std::size_t ContentStore::object_count() const {
  std::shared_lock lock(mu_);
  return index_.size();
}

std::vector<Cid> ContentStore::cids() const {
  std::shared_lock lock(mu_);
  std::vector<Cid> out;
  out.reserve(index_.size());
  for (const auto& [text, _] : index_) out.push_back(Cid::parse(text));
  return out;
}

std::uint64_t ContentStore::pinned_at(const Cid& cid) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(cid.str());
  if (it == index_.end()) throw Error(ErrorCode::NotFound, "no object pinned under " + cid.str());
  return it->second.pinned_at;
}

}  // namespace nftm::content
