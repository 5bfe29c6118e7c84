#pragma once

#include <stdexcept>
#include <string>

#include "shield/cryptor.hpp"

namespace shield {

// ---- error taxonomy: each failure mode is separately catchable ----
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FileError : IoError {  // missing/unreadable/unwritable path
    using IoError::IoError;
};
struct FormatError : IoError {  // bad magic or malformed header
    using IoError::IoError;
};
struct VersionError : IoError {
    using IoError::IoError;
};
struct TruncationError : IoError {
    using IoError::IoError;
};

// ---- images: 8-bit RGB PNG ----
// Quantizes to 8 bits on save; load returns values in [0,1].
void save_png(const std::string& path, const Tensor& image);
Tensor load_png(const std::string& path);
Tensor quantize8(const Tensor& image);

// ---- checkpoints: versioned header + flat double payload ----
struct Checkpoint {
    std::string kind;                                  // "cryptor_pair" | "encoder"
    std::string meta;                                  // free-form json text
    std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

void save_cryptor_pair(const std::string& path, const CryptorPair& pair);
CryptorPair load_cryptor_pair(const std::string& path);

void save_encoder(const std::string& path, const EncoderModel& model);
EncoderModel load_encoder(const std::string& path);

// ---- password files: small json text records ----
void save_password(const std::string& path, const Password& p);
Password load_password(const std::string& path);

}  // namespace shield
