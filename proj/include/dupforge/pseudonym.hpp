#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

namespace dupforge {

inline std::string utc_now_iso() {
    auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct AuditEntry {
    std::string at;      // UTC timestamp
    std::string actor;
    std::string uid;
    std::string reason;
    std::string outcome;  // granted | denied | not_found | missing_reason
};

enum class ReverseStatus { granted, denied, not_found, missing_reason };

struct ReverseResult {
    ReverseStatus status = ReverseStatus::denied;
    std::string identity;
};

/// Keyed, deterministic identity -> "uidNNNNNNNNNN" mapping.
///
/// A UID is the HMAC-SHA256 of the identity under the map key, reduced to
/// ten decimal digits. Collisions are resolved by re-keying with a counter
/// suffix, so the mapping stays injective. Reverse lookup requires the key
/// and a reason, and every attempt (granted or not) appends one audit entry.
class PseudonymMap {
public:
    using AuditSink = std::function<void(AuditEntry const&)>;

    explicit PseudonymMap(std::string key) : key_(std::move(key)) {
        if (key_.empty()) {
            throw std::invalid_argument("pseudonym key must be non-empty");
        }
    }

    PseudonymMap(PseudonymMap const&) = delete;
    PseudonymMap& operator=(PseudonymMap const&) = delete;

    /// Called (under the map lock) for each audit entry before reverse()
    /// returns, so callers can persist the entry ahead of any response.
    void set_audit_sink(AuditSink sink) {
        std::lock_guard lock(mutex_);
        sink_ = std::move(sink);
    }

    std::string pseudonymize(std::string const& identity) {
        std::lock_guard lock(mutex_);
        if (auto it = forward_.find(identity); it != forward_.end()) {
            return it->second;
        }
        for (uint32_t attempt = 0;; ++attempt) {
            auto uid = derive(identity, attempt);
            if (!reverse_.contains(uid)) {
                forward_.emplace(identity, uid);
                reverse_.emplace(uid, identity);
                return uid;
            }
        }
    }

    ReverseResult reverse(std::string const& uid, std::string_view key, std::string const& reason,
                          std::string const& actor = "unknown") {
        std::lock_guard lock(mutex_);
        ReverseResult result;
        if (!key_matches(key)) {
            result.status = ReverseStatus::denied;
        } else if (reason.empty()) {
            result.status = ReverseStatus::missing_reason;
        } else if (auto it = reverse_.find(uid); it == reverse_.end()) {
            result.status = ReverseStatus::not_found;
        } else {
            result.status = ReverseStatus::granted;
            result.identity = it->second;
        }
        AuditEntry entry{utc_now_iso(), actor, uid, reason, std::string(to_string(result.status))};
        if (sink_) {
            sink_(entry);
        }
        audit_.push_back(std::move(entry));
        return result;
    }

    [[nodiscard]] bool contains_uid(std::string const& uid) const {
        std::lock_guard lock(mutex_);
        return reverse_.contains(uid);
    }

    [[nodiscard]] std::size_t size() const {
        std::lock_guard lock(mutex_);
        return forward_.size();
    }

    [[nodiscard]] std::vector<AuditEntry> audit_log() const {
        std::lock_guard lock(mutex_);
        return audit_;
    }

    /// Identities currently mapped; used to check that exports never leak them.
    [[nodiscard]] std::vector<std::string> identities() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> out;
        for (auto const& [id, _] : forward_) out.push_back(id);
        return out;
    }

    [[nodiscard]] bool key_matches(std::string_view key) const {
        auto const a = sha256(key);
        auto const b = sha256(key_);
        return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
    }

    static std::string_view to_string(ReverseStatus s) {
        switch (s) {
        case ReverseStatus::granted: return "granted";
        case ReverseStatus::denied: return "denied";
        case ReverseStatus::not_found: return "not_found";
        case ReverseStatus::missing_reason: return "missing_reason";
        }
        return "denied";
    }

    /// Writes the mapping encrypted with AES-256-GCM under a key derived
    /// from the map key. Layout: "DFPM1" | iv[12] | tag[16] | ciphertext.
    void save(std::filesystem::path const& path) const {
        nlohmann::json j;
        {
            std::lock_guard lock(mutex_);
            j["entries"] = forward_;
        }
        auto const plain = j.dump();
        std::array<unsigned char, 12> iv{};
        if (RAND_bytes(iv.data(), static_cast<int>(iv.size())) != 1) {
            throw std::runtime_error("RAND_bytes failed");
        }
        auto const k = sha256(std::string("dupforge-pseudonym-file:") + key_);
        std::string cipher(plain.size(), '\0');
        std::array<unsigned char, 16> tag{};
        std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(),
                                                                            &EVP_CIPHER_CTX_free);
        int len = 0;
        bool ok = EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, k.data(), iv.data()) == 1 &&
                  EVP_EncryptUpdate(ctx.get(), reinterpret_cast<unsigned char*>(cipher.data()), &len,
                                    reinterpret_cast<unsigned char const*>(plain.data()),
                                    static_cast<int>(plain.size())) == 1 &&
                  EVP_EncryptFinal_ex(ctx.get(), nullptr, &len) == 1 &&
                  EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, tag.data()) == 1;
        if (!ok) {
            throw std::runtime_error("pseudonym map encryption failed");
        }
        std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write("DFPM1", 5);
        out.write(reinterpret_cast<char const*>(iv.data()), iv.size());
        out.write(reinterpret_cast<char const*>(tag.data()), tag.size());
        out.write(cipher.data(), static_cast<std::streamsize>(cipher.size()));
    }

    /// Loads a map written by save(). Throws on a wrong key or tampering.
    static std::unique_ptr<PseudonymMap> load(std::filesystem::path const& path, std::string key) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw std::runtime_error("cannot open pseudonym map " + path.string());
        }
        std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (blob.size() < 33 || blob.substr(0, 5) != "DFPM1") {
            throw std::runtime_error("not a pseudonym map file");
        }
        auto const* iv = reinterpret_cast<unsigned char const*>(blob.data() + 5);
        std::array<unsigned char, 16> tag{};
        std::copy_n(blob.data() + 17, 16, tag.begin());
        std::string_view cipher(blob.data() + 33, blob.size() - 33);
        auto const k = sha256(std::string("dupforge-pseudonym-file:") + key);
        std::string plain(cipher.size(), '\0');
        std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(),
                                                                            &EVP_CIPHER_CTX_free);
        int len = 0;
        bool ok = EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, k.data(), iv) == 1 &&
                  EVP_DecryptUpdate(ctx.get(), reinterpret_cast<unsigned char*>(plain.data()), &len,
                                    reinterpret_cast<unsigned char const*>(cipher.data()),
                                    static_cast<int>(cipher.size())) == 1 &&
                  EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, tag.data()) == 1 &&
                  EVP_DecryptFinal_ex(ctx.get(), nullptr, &len) == 1;
        if (!ok) {
            throw std::runtime_error("pseudonym map could not be decrypted (wrong key?)");
        }
        auto map = std::make_unique<PseudonymMap>(std::move(key));
        auto const j = nlohmann::json::parse(plain);
        for (auto const& [identity, uid] : j.at("entries").items()) {
            map->forward_.emplace(identity, uid.get<std::string>());
            map->reverse_.emplace(uid.get<std::string>(), identity);
        }
        return map;
    }

private:
    static std::array<unsigned char, 32> sha256(std::string_view data) {
        std::array<unsigned char, 32> out{};
        SHA256(reinterpret_cast<unsigned char const*>(data.data()), data.size(), out.data());
        return out;
    }

    [[nodiscard]] std::string derive(std::string const& identity, uint32_t attempt) const {
        std::string msg = identity;
        if (attempt > 0) {
            msg += '\x1f' + std::to_string(attempt);
        }
        unsigned char mac[EVP_MAX_MD_SIZE];
        unsigned int mac_len = 0;
        HMAC(EVP_sha256(), key_.data(), static_cast<int>(key_.size()),
             reinterpret_cast<unsigned char const*>(msg.data()), msg.size(), mac, &mac_len);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v = (v << 8U) | mac[i];
        }
        auto digits = std::to_string(v % 10'000'000'000ULL);
        return "uid" + std::string(10 - digits.size(), '0') + digits;
    }

    std::string key_;
    std::map<std::string, std::string> forward_;
    std::map<std::string, std::string> reverse_;
    std::vector<AuditEntry> audit_;
    AuditSink sink_;
    mutable std::mutex mutex_;
};

}  // namespace dupforge
