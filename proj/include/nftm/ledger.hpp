#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "nftm/address.hpp"
#include "nftm/bytes.hpp"
#include "nftm/clock.hpp"
#include "nftm/marketplace.hpp"
#include "nftm/wallet.hpp"

namespace nftm::ledger {

struct Account {
  Address address;
  std::uint64_t balance = 0;
  std::uint64_t nonce = 0;
  bool operator==(const Account&) const = default;
};

struct Transfer {
  Address to;
  bool operator==(const Transfer&) const = default;
};

/// Currency issuance. Only the ledger itself creates these (see Ledger::faucet); they are
/// refused at submit_transaction.
struct FaucetCredit {
  Address to;
  bool operator==(const FaucetCredit&) const = default;
};

using Call = std::variant<Transfer, FaucetCredit, market::Mint, market::BuyToken>;

/// Call opcodes in the canonical encoding.
inline constexpr std::uint8_t kOpMint = 0x01;
inline constexpr std::uint8_t kOpBuyToken = 0x02;
inline constexpr std::uint8_t kOpTransfer = 0x10;
inline constexpr std::uint8_t kOpFaucet = 0x11;

/// A signed, nonce-protected call.
///
/// Unsigned (signing preimage):
///   [u8 version=1][from 20][nonce u64][value u64][u32 len][call]
/// call:
///   0x01 Mint      [u32 len][uri utf-8][price u64]
///   0x02 BuyToken  [token_id u64]
///   0x10 Transfer  [to 20]
///   0x11 Faucet    [to 20]
/// Signed: [u32 len][unsigned][public key 32][signature 64]. All integers big-endian.
struct Transaction {
  Address from;
  std::uint64_t nonce = 0;
  std::uint64_t value = 0;
  Call call;
  wallet::PublicKey public_key;
  wallet::Signature signature;

  Bytes unsigned_bytes() const;
  Bytes encode() const;
  /// Strict decode: unknown opcodes and trailing bytes throw Error(Validation).
  static Transaction decode(ByteView bytes);
  static Transaction decode_unsigned(ByteView bytes);
  Hash32 hash() const;

  void sign_with(const wallet::KeyPair& keys);

  bool operator==(const Transaction&) const = default;
};

struct Block {
  std::uint64_t height = 0;
  Hash32 prev_hash{};
  std::vector<Hash32> tx_hashes;
  std::uint64_t timestamp = 0;
  Hash32 block_hash{};

  /// [height u64][prev_hash 32][timestamp u64][count u64][tx hashes...]
  Bytes header_bytes() const;
  Hash32 compute_hash() const { return sha256(header_bytes()); }
};

struct Receipt {
  Hash32 tx_hash{};
  bool success = true;
  std::string revert_reason;  // empty on success
  std::uint64_t block_height = 0;
  std::vector<market::Event> events;
};

/// Deterministic single-node chain with the marketplace contract built in.
///
/// Submissions are queued in arrival order and executed when a block is sealed. Failed
/// transactions produce Reverted receipts and leave state (balances, nonces, tokens)
/// untouched. There are no fees, so total balances always equal total faucet issuance.
///
/// Thread-safe: mutation is single-writer, queries read the last sealed state.
class Ledger {
 public:
  Ledger(std::shared_ptr<const Clock> clock, market::UriResolver resolver);

  /// Credits `to` by `amount` and seals a block containing the credit (together with anything
  /// already queued). amount == 0 throws Error(Validation).
  Receipt faucet(const Address& to, std::uint64_t amount);

  /// Errors: BadSignature, NonceMismatch, UnknownSender, Validation.
  Hash32 submit_transaction(const Transaction& tx);

  Block seal_block();

  std::uint64_t get_balance(const Address& a) const;
  std::uint64_t get_nonce(const Address& a) const;
  std::optional<Account> account(const Address& a) const;
  /// Throws Error(NotFound).
  Receipt get_receipt(const Hash32& tx_hash) const;

  std::vector<market::NFTRecord> get_all_listings() const;
  std::vector<market::NFTRecord> get_tokens_of(const Address& owner) const;
  Address owner_of(market::TokenId id) const;
  market::Cid token_uri(market::TokenId id) const;
  std::optional<market::NFTRecord> find_token(market::TokenId id) const;
  std::uint64_t total_minted() const;

  std::uint64_t height() const;
  std::vector<Block> blocks() const;
  Block block_at(std::uint64_t height) const;
  std::uint64_t total_issuance() const;
  std::uint64_t total_balances() const;
  std::size_t pending_count() const;

  /// SHA-256 over the sorted account table followed by the token table.
  Hash32 state_hash() const;

  /// Re-derives every block hash and checks prev_hash linkage from genesis.
  bool verify_chain() const;

  /// Newline-delimited chain log. Each transaction is one line of hex-encoded canonical
  /// bytes; each sealed block ends with a line "seal <height> <timestamp>".
  std::string export_log() const;
  /// Replays a log into this ledger, which must be at genesis. Throws Error(CorruptData)
  /// naming the offending line.
  void import_log(std::string_view log);

  /// Called with the log lines of each block as it is sealed.
  using LogSink = std::function<void(std::string_view lines)>;
  void set_log_sink(LogSink sink);

 private:
  struct State {
    std::map<Address, Account> accounts;
    market::Marketplace market;
    std::uint64_t issuance = 0;
  };

  struct Pending {
    Transaction tx;
    Hash32 hash;
  };

  Block seal_locked(std::uint64_t timestamp);
  Receipt execute(State& state, const Transaction& tx, const Hash32& hash,
                  std::uint64_t height) const;
  void enqueue_locked(Transaction tx);
  static std::string block_log(const Block& block, const std::vector<Transaction>& txs);

  std::shared_ptr<const Clock> clock_;
  market::UriResolver resolver_;

  mutable std::mutex write_mu_;  // queue + sealing
  std::deque<Pending> queue_;
  std::map<Address, std::uint64_t> pending_nonces_;  // per sender, queued but unexecuted
  std::uint64_t faucet_seq_ = 0;
  LogSink sink_;

  mutable std::shared_mutex state_mu_;
  State state_;
  std::vector<Block> blocks_;
  std::vector<std::vector<Transaction>> block_txs_;
  std::map<Hash32, Receipt> receipts_;
};

}  // namespace nftm::ledger
