#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "nftm/bytes.hpp"
#include "nftm/clock.hpp"

namespace nftm::content {

std::string base58_encode(ByteView data);
/// Throws Error(Validation) on characters outside the bitcoin alphabet.
Bytes base58_decode(std::string_view text);

/// CIDv0-shaped identifier: base58btc(0x12 0x20 || sha256(content)).
class Cid {
 public:
  /// Validates that the text decodes to a 34-byte sha2-256 multihash.
  static Cid parse(std::string_view text);
  static Cid of(ByteView content);

  const std::string& str() const { return text_; }
  Hash32 digest() const;

  auto operator<=>(const Cid&) const = default;

 private:
  explicit Cid(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

inline Cid compute_cid(ByteView content) { return Cid::of(content); }

/// Token metadata pinned at mint time. Canonical form is compact JSON with keys in the
/// order name, description, price, image.
struct MetadataDocument {
  std::string name;
  std::string description;
  std::uint64_t price = 0;
  std::string image;  // "cid:<Cid>" or a remote URL

  std::string to_canonical_json() const;
  /// Requires exactly the four keys with the right JSON types. Throws Error(Validation).
  static MetadataDocument from_json(std::string_view text);

  bool operator==(const MetadataDocument&) const = default;
};

inline constexpr std::string_view kJsonMediaType = "application/json";

struct Fetched {
  Bytes bytes;
  std::string media_type;
};

/// Append-only record sink behind the store. Records are addressed by byte offset.
class ObjectLog {
 public:
  virtual ~ObjectLog() = default;
  virtual std::uint64_t append(ByteView record) = 0;
  virtual Bytes read(std::uint64_t offset, std::size_t length) const = 0;
  virtual Bytes read_all() const = 0;
};

/// Content-addressed object store. Pinning is idempotent; every fetch re-hashes the stored
/// bytes. Reads are concurrent, appends are serialized.
///
/// On-disk record: [u32 BE length of rest][u32 BE media-type length][media type][content].
class ContentStore {
 public:
  explicit ContentStore(std::shared_ptr<const Clock> clock);
  /// Opens (or creates) an object log file and rebuilds the index from it. A truncated or
  /// malformed log throws Error(CorruptData) naming the file.
  static std::unique_ptr<ContentStore> open(const std::filesystem::path& log_path,
                                            std::shared_ptr<const Clock> clock);

  Cid pin_bytes(ByteView content, std::string_view media_type);
  Cid pin_json(const MetadataDocument& doc);

  /// Errors: NotFound, IntegrityFailure.
  Fetched fetch(const Cid& cid) const;
  /// Fetches and parses a pinned metadata document; the stored bytes must be canonical.
  MetadataDocument fetch_metadata(const Cid& cid) const;

  bool contains(const Cid& cid) const;
  std::size_t object_count() const;
  std::vector<Cid> cids() const;
  std::uint64_t pinned_at(const Cid& cid) const;

 private:
  struct IndexEntry {
    std::uint64_t content_offset = 0;
    std::size_t content_size = 0;
    std::string media_type;
    std::uint64_t pinned_at = 0;
  };

  ContentStore(std::shared_ptr<const Clock> clock, std::unique_ptr<ObjectLog> log);

  std::shared_ptr<const Clock> clock_;
  std::unique_ptr<ObjectLog> log_;
  mutable std::shared_mutex mu_;
  std::map<std::string, IndexEntry, std::less<>> index_;
};

}  // namespace nftm::content
