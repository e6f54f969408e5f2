#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace spatialmut {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::string_view name = "philox4x32-10";

    static constexpr Counter generate(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// What a substream is used for. Part of the counter, so each purpose gets
/// disjoint randomness.
enum class StreamPurpose : std::uint8_t {
    ArrivalTime = 0,
    Location = 1,
    VolumeSampling = 2,
    Oracle = 3,
};

/// Identifies an independent substream: (master seed, replicate, type, purpose).
struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint32_t replicate = 0;
    std::uint32_t type_index = 0;  // < 2^24
    StreamPurpose purpose = StreamPurpose::ArrivalTime;
};

/// Sequential view of one Philox substream. The master seed is the key; the
/// counter packs (block index, replicate, type, purpose), so streams for
/// distinct keys never overlap and adding replicates or types leaves
/// existing streams untouched.
class Substream {
public:
    explicit Substream(const StreamKey& key) noexcept
        : key_{static_cast<std::uint32_t>(key.master_seed),
               static_cast<std::uint32_t>(key.master_seed >> 32)},
          replicate_(key.replicate),
          tag_((key.type_index << 8) | static_cast<std::uint32_t>(key.purpose)) {}

    std::uint64_t next_u64() noexcept {
        if (buffered_ == 0) refill();
        --buffered_;
        return buffer_[buffered_];
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

    std::uint64_t blocks_consumed() const noexcept { return block_; }

private:
    void refill() noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32), replicate_, tag_};
        const auto out = Philox4x32::generate(ctr, key_);
        ++block_;
        // Consumed back to front.
        buffer_[1] = (std::uint64_t{out[1]} << 32) | out[0];
        buffer_[0] = (std::uint64_t{out[3]} << 32) | out[2];
        buffered_ = 2;
    }

    Philox4x32::Key key_;
    std::uint32_t replicate_;
    std::uint32_t tag_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

}  // namespace spatialmut
