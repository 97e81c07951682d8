#include "nftm/ledger.hpp"

#include <sstream>

#include "nftm/error.hpp"

namespace nftm::ledger {

namespace {

constexpr std::uint8_t kTxVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Address read_address(ByteReader& r) { return Address(r.fixed<Address::kSize>()); }

Bytes encode_call(const Call& call) {
  ByteWriter w;
  std::visit(Overloaded{
                 [&](const market::Mint& m) {
                   w.u8(kOpMint);
                   w.str(m.token_uri.str());
                   w.u64(m.price);
                 },
                 [&](const market::BuyToken& b) {
                   w.u8(kOpBuyToken);
                   w.u64(b.token_id.value);
                 },
                 [&](const Transfer& t) {
                   w.u8(kOpTransfer);
                   w.raw(t.to.bytes());
                 },
                 [&](const FaucetCredit& f) {
                   w.u8(kOpFaucet);
                   w.raw(f.to.bytes());
                 },
             },
             call);
  return std::move(w).take();
}

Call decode_call(ByteView bytes) {
  ByteReader r(bytes);
  Call call;
  switch (r.u8()) {
    case kOpMint: {
      auto uri = market::Cid::parse(r.str());
      call = market::Mint{uri, r.u64()};
      break;
    }
    case kOpBuyToken: call = market::BuyToken{market::TokenId{r.u64()}}; break;
    case kOpTransfer: call = Transfer{read_address(r)}; break;
    case kOpFaucet: call = FaucetCredit{read_address(r)}; break;
    default: throw Error(ErrorCode::Validation, "unknown call opcode");
  }
  r.expect_done();
  return call;
}

void decode_unsigned_into(ByteReader& r, Transaction& tx) {
  if (r.u8() != kTxVersion) throw Error(ErrorCode::Validation, "unsupported transaction version");
  tx.from = read_address(r);
  tx.nonce = r.u64();
  tx.value = r.u64();
  auto call = r.blob();
  tx.call = decode_call(call);
}

}  // namespace

Bytes Transaction::unsigned_bytes() const {
  ByteWriter w;
  w.u8(kTxVersion);
  w.raw(from.bytes());
  w.u64(nonce);
  w.u64(value);
  w.blob(encode_call(call));
  return std::move(w).take();
}

Bytes Transaction::encode() const {
  ByteWriter w;
  w.blob(unsigned_bytes());
  w.raw(public_key.bytes);
  w.raw(signature.bytes);
  return std::move(w).take();
}

Transaction Transaction::decode(ByteView bytes) {
  ByteReader r(bytes);
  auto body = r.blob();
  Transaction tx = decode_unsigned(body);
  tx.public_key.bytes = r.fixed<wallet::PublicKey::kSize>();
  tx.signature.bytes = r.fixed<wallet::Signature::kSize>();
  r.expect_done();
  return tx;
}

Transaction Transaction::decode_unsigned(ByteView bytes) {
  ByteReader r(bytes);
  Transaction tx;
  decode_unsigned_into(r, tx);
  r.expect_done();
  return tx;
}

Hash32 Transaction::hash() const { return sha256(encode()); }

void Transaction::sign_with(const wallet::KeyPair& keys) {
  public_key = keys.public_key();
  signature = wallet::sign(keys, unsigned_bytes());
}

Bytes Block::header_bytes() const {
  ByteWriter w;
  w.u64(height);
  w.raw(prev_hash);
  w.u64(timestamp);
  w.u64(tx_hashes.size());
  for (const auto& h : tx_hashes) w.raw(h);
  return std::move(w).take();
}

Ledger::Ledger(std::shared_ptr<const Clock> clock, market::UriResolver resolver)
    : clock_(std::move(clock)), resolver_(std::move(resolver)) {
  // Genesis is fixed (timestamp 0) so every node and every replay shares it.
  Block genesis;
  genesis.block_hash = genesis.compute_hash();
  blocks_.push_back(genesis);
  block_txs_.emplace_back();
}

Receipt Ledger::faucet(const Address& to, std::uint64_t amount) {
  if (amount == 0) throw Error(ErrorCode::Validation, "faucet amount must be positive");
  Hash32 hash;
  {
    std::lock_guard lock(write_mu_);
    {
      std::shared_lock state_lock(state_mu_);
      std::uint64_t queued = 0;
      for (const auto& p : queue_) {
        if (std::holds_alternative<FaucetCredit>(p.tx.call)) queued += p.tx.value;
      }
      if (state_.issuance + queued + amount < state_.issuance + queued) {
        throw Error(ErrorCode::Validation, "faucet amount overflows total issuance");
      }
    }
    Transaction tx;
    tx.nonce = faucet_seq_;
    tx.value = amount;
    tx.call = FaucetCredit{to};
    hash = tx.hash();
    enqueue_locked(std::move(tx));
    seal_locked(clock_->now());
  }
  return get_receipt(hash);
}

Hash32 Ledger::submit_transaction(const Transaction& tx) {
  if (std::holds_alternative<FaucetCredit>(tx.call)) {
    throw Error(ErrorCode::Validation, "faucet credits cannot be submitted");
  }
  if (wallet::derive_address(tx.public_key) != tx.from ||
      !wallet::verify(tx.public_key, tx.unsigned_bytes(), tx.signature)) {
    throw Error(ErrorCode::BadSignature, "signature does not verify for " + tx.from.hex());
  }
  std::lock_guard lock(write_mu_);
  std::uint64_t expected = 0;
  {
    std::shared_lock state_lock(state_mu_);
    auto it = state_.accounts.find(tx.from);
    if (it == state_.accounts.end()) {
      throw Error(ErrorCode::UnknownSender, "no account for " + tx.from.hex());
    }
    expected = it->second.nonce;
  }
  if (auto p = pending_nonces_.find(tx.from); p != pending_nonces_.end()) expected += p->second;
  if (tx.nonce != expected) {
    throw Error(ErrorCode::NonceMismatch, "expected nonce " + std::to_string(expected) +
                                              ", got " + std::to_string(tx.nonce));
  }
  auto hash = tx.hash();
  enqueue_locked(tx);
  return hash;
}

void Ledger::enqueue_locked(Transaction tx) {
  if (std::holds_alternative<FaucetCredit>(tx.call)) {
    faucet_seq_ = std::max(faucet_seq_, tx.nonce + 1);
  } else {
    ++pending_nonces_[tx.from];
  }
  auto hash = tx.hash();
  queue_.push_back(Pending{std::move(tx), hash});
}

Block Ledger::seal_block() {
  std::lock_guard lock(write_mu_);
  return seal_locked(clock_->now());
}

Block Ledger::seal_locked(std::uint64_t timestamp) {
  std::unique_lock state_lock(state_mu_);
  Block block;
  block.height = blocks_.back().height + 1;
  block.prev_hash = blocks_.back().block_hash;
  block.timestamp = timestamp;

  std::vector<Transaction> txs;
  txs.reserve(queue_.size());
  for (auto& p : queue_) {
    auto receipt = execute(state_, p.tx, p.hash, block.height);
    receipts_[p.hash] = std::move(receipt);  // a resubmitted reverted tx keeps its latest receipt
    block.tx_hashes.push_back(p.hash);
    txs.push_back(std::move(p.tx));
  }
  queue_.clear();
  pending_nonces_.clear();

  block.block_hash = block.compute_hash();
  blocks_.push_back(block);
  if (sink_) sink_(block_log(block, txs));
  block_txs_.push_back(std::move(txs));
  return block;
}

Receipt Ledger::execute(State& state, const Transaction& tx, const Hash32& hash,
                        std::uint64_t height) const {
  Receipt receipt;
  receipt.tx_hash = hash;
  receipt.block_height = height;
  auto revert = [&](std::string_view reason) {
    receipt.success = false;
    receipt.revert_reason = std::string(reason);
    return receipt;
  };

  if (const auto* credit = std::get_if<FaucetCredit>(&tx.call)) {
    auto& to = state.accounts[credit->to];
    to.address = credit->to;
    to.balance += tx.value;
    state.issuance += tx.value;
    return receipt;
  }

  // Checks only read state; the block below them is the only place that writes.
  auto sender_it = state.accounts.find(tx.from);
  if (sender_it == state.accounts.end()) return revert("UnknownSender");
  if (sender_it->second.nonce != tx.nonce) return revert("NonceMismatch");
  const auto balance = sender_it->second.balance;

  if (const auto* transfer = std::get_if<Transfer>(&tx.call)) {
    if (balance < tx.value) return revert("InsufficientFunds");
    sender_it->second.balance -= tx.value;
    auto& to = state.accounts[transfer->to];
    to.address = transfer->to;
    to.balance += tx.value;
  } else if (const auto* mint = std::get_if<market::Mint>(&tx.call)) {
    if (auto r = state.market.check_mint(*mint, tx.value, resolver_)) {
      return revert(market::revert_name(*r));
    }
    receipt.events.emplace_back(state.market.apply_mint(tx.from, *mint));
  } else if (const auto* buy = std::get_if<market::BuyToken>(&tx.call)) {
    auto checked = state.market.check_buy(tx.from, *buy, tx.value, balance);
    if (const auto* r = std::get_if<market::Revert>(&checked)) {
      return revert(market::revert_name(*r));
    }
    const auto& sale = std::get<market::Sale>(checked);
    state.accounts.at(sale.buyer).balance -= sale.price;
    state.accounts[sale.seller].balance += sale.price;
    receipt.events.emplace_back(state.market.apply_buy(sale));
  }
  ++state.accounts.at(tx.from).nonce;
  return receipt;
}

std::uint64_t Ledger::get_balance(const Address& a) const {
  auto acc = account(a);
  return acc ? acc->balance : 0;
}

std::uint64_t Ledger::get_nonce(const Address& a) const {
  auto acc = account(a);
  return acc ? acc->nonce : 0;
}

std::optional<Account> Ledger::account(const Address& a) const {
  std::shared_lock lock(state_mu_);
  auto it = state_.accounts.find(a);
  if (it == state_.accounts.end()) return std::nullopt;
  return it->second;
}

Receipt Ledger::get_receipt(const Hash32& tx_hash) const {
  std::shared_lock lock(state_mu_);
  auto it = receipts_.find(tx_hash);
  if (it == receipts_.end()) throw Error(ErrorCode::NotFound, "no receipt for " + to_hex(tx_hash));
  return it->second;
}

std::vector<market::NFTRecord> Ledger::get_all_listings() const {
  std::shared_lock lock(state_mu_);
  return state_.market.listings();
}

std::vector<market::NFTRecord> Ledger::get_tokens_of(const Address& owner) const {
  std::shared_lock lock(state_mu_);
  return state_.market.tokens_of(owner);
}

Address Ledger::owner_of(market::TokenId id) const {
  std::shared_lock lock(state_mu_);
  return state_.market.owner_of(id);
}

market::Cid Ledger::token_uri(market::TokenId id) const {
  std::shared_lock lock(state_mu_);
  return state_.market.token_uri(id);
}

std::optional<market::NFTRecord> Ledger::find_token(market::TokenId id) const {
  std::shared_lock lock(state_mu_);
  return state_.market.find(id);
}

std::uint64_t Ledger::total_minted() const {
  std::shared_lock lock(state_mu_);
  return state_.market.total_minted();
}

std::uint64_t Ledger::height() const {
  std::shared_lock lock(state_mu_);
  return blocks_.back().height;
}

std::vector<Block> Ledger::blocks() const {
  std::shared_lock lock(state_mu_);
  return blocks_;
}

Block Ledger::block_at(std::uint64_t height) const {
  std::shared_lock lock(state_mu_);
  if (height >= blocks_.size()) throw Error(ErrorCode::NotFound, "no block at that height");
  return blocks_[height];
}

std::uint64_t Ledger::total_issuance() const {
  std::shared_lock lock(state_mu_);
  return state_.issuance;
}

std::uint64_t Ledger::total_balances() const {
  std::shared_lock lock(state_mu_);
  std::uint64_t sum = 0;
  for (const auto& [_, acc] : state_.accounts) sum += acc.balance;
  return sum;
}

std::size_t Ledger::pending_count() const {
  std::lock_guard lock(write_mu_);
  return queue_.size();
}

Hash32 Ledger::state_hash() const {
  std::shared_lock lock(state_mu_);
  ByteWriter w;
  w.u64(state_.accounts.size());
  for (const auto& [addr, acc] : state_.accounts) {
    w.raw(addr.bytes());
    w.u64(acc.balance);
    w.u64(acc.nonce);
  }
  state_.market.write_state(w);
  return sha256(w.bytes());
}

bool Ledger::verify_chain() const {
  std::shared_lock lock(state_mu_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    if (b.height != i || b.compute_hash() != b.block_hash) return false;
    if (i == 0 ? b.prev_hash != Hash32{} : b.prev_hash != blocks_[i - 1].block_hash) return false;
    if (b.tx_hashes.size() != block_txs_[i].size()) return false;
    for (std::size_t k = 0; k < b.tx_hashes.size(); ++k) {
      if (block_txs_[i][k].hash() != b.tx_hashes[k]) return false;
    }
  }
  return true;
}

std::string Ledger::block_log(const Block& block, const std::vector<Transaction>& txs) {
  std::string out;
  for (const auto& tx : txs) {
    out += to_hex(tx.encode());
    out += '\n';
  }
  out += "seal " + std::to_string(block.height) + " " + std::to_string(block.timestamp) + "\n";
  return out;
}

std::string Ledger::export_log() const {
  std::shared_lock lock(state_mu_);
  std::string out;
  for (std::size_t i = 1; i < blocks_.size(); ++i) out += block_log(blocks_[i], block_txs_[i]);
  return out;
}

void Ledger::import_log(std::string_view log) {
  if (height() != 0 || pending_count() != 0) {
    throw Error(ErrorCode::Validation, "import_log requires a ledger at genesis");
  }
  // The sink sees replayed blocks too; callers replaying a file detach it first.
  std::istringstream in{std::string(log)};
  std::string line;
  std::size_t line_no = 0;
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::CorruptData,
                 "chain log line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("seal ", 0) == 0) {
      std::istringstream fields(line.substr(5));
      std::uint64_t h = 0, ts = 0;
      if (!(fields >> h >> ts)) throw corrupt("malformed seal record");
      std::lock_guard lock(write_mu_);
      auto block = seal_locked(ts);
      if (block.height != h) throw corrupt("seal height does not match replayed chain");
      continue;
    }
    Transaction tx;
    try {
      tx = Transaction::decode(from_hex(line));
    } catch (const Error& e) {
      throw corrupt(e.what());
    }
    if (std::holds_alternative<FaucetCredit>(tx.call)) {
      std::lock_guard lock(write_mu_);
      enqueue_locked(std::move(tx));
    } else {
      try {
        submit_transaction(tx);
      } catch (const Error& e) {
        throw corrupt(e.what());
      }
    }
  }
}

void Ledger::set_log_sink(LogSink sink) {
  std::lock_guard lock(write_mu_);
  sink_ = std::move(sink);
}

}  // namespace nftm::ledger
