// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "../support.hpp"

namespace vr = videorepair;
using vrtest::TempDir;

namespace {

// Independent little-endian reference encoder, byte by byte.
std::vector<std::uint8_t> reference_encode(std::uint8_t dtype, const std::vector<std::uint32_t>& dims,
                                           const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> out = {'V', 'R', 'T', 'C', 1, dtype, static_cast<std::uint8_t>(dims.size())};
    for (auto d : dims) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((d >> (8 * i)) & 0xff));
    }
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

}  // namespace

TEST(Container, VideoBytesMatchReferenceLayout) {
    const auto v = vrtest::random_video(2, 3, 5, 3, 1);
    const auto bytes = vr::vrtc::encode(vr::vrtc::to_container(v));
    EXPECT_EQ(bytes, reference_encode(0, {2, 3, 5, 3}, v.data));
}

TEST(Container, NoisePayloadIsLittleEndianFloat) {
    vr::NoiseVolume n({1, 1, 1, 2});
    n.data = {1.0f, -2.5f};
    const auto bytes = vr::vrtc::encode(vr::vrtc::to_container(n));
    // 1.0f = 0x3f800000, -2.5f = 0xc0200000
    const std::vector<std::uint8_t> payload = {0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x20, 0xc0};
    EXPECT_EQ(bytes, reference_encode(1, {1, 1, 1, 2}, payload));
}

TEST(Container, RoundTripsEveryVolumeKind) {
    const auto video = vrtest::random_video(3, 7, 5, 3, 2);
    EXPECT_EQ(vr::vrtc::video_from(vr::vrtc::decode(vr::vrtc::encode(vr::vrtc::to_container(video)))), video);

    const auto mask = vrtest::random_mask(4, 9, 6, 3);
    EXPECT_EQ(vr::vrtc::mask_from(vr::vrtc::decode(vr::vrtc::encode(vr::vrtc::to_container(mask)))), mask);

    const auto noise = vr::latent::sample_noise({2, 4, 3, 5}, 9);
    EXPECT_EQ(vr::vrtc::noise_from(vr::vrtc::decode(vr::vrtc::encode(vr::vrtc::to_container(noise)))), noise);

    const auto pooled = vr::latent::pool_mask(mask, 4);
    const auto back = vr::vrtc::pooled_from(vr::vrtc::decode(vr::vrtc::encode(vr::vrtc::to_container(pooled))));
    ASSERT_EQ(back.data.size(), pooled.data.size());
    for (std::size_t i = 0; i < back.data.size(); ++i) EXPECT_FLOAT_EQ(float(back.data[i]), float(pooled.data[i]));
}

TEST(Container, EightyOneFrameFilesRoundTrip) {
    TempDir dir("vrtc");
    const auto video = vrtest::random_video(81, 16, 24, 3, 5);
    vr::vrtc::write_file(dir / "v.vrtc", video);
    EXPECT_EQ(vr::vrtc::video_from(vr::vrtc::read_file(dir / "v.vrtc")), video);

    const auto noise = vr::latent::sample_noise({81, 4, 2, 3}, 6);
    vr::vrtc::write_file(dir / "sub/n.vrtc", noise);
    EXPECT_EQ(vr::vrtc::noise_from(vr::vrtc::read_file(dir / "sub/n.vrtc")), noise);
}

TEST(Container, SpecialFloatsSurviveBitExact) {
    vr::NoiseVolume n({1, 1, 1, 4});
    n.data = {0.0f, -0.0f, std::numeric_limits<float>::denorm_min(), std::numeric_limits<float>::max()};
    const auto back = vr::vrtc::noise_from(vr::vrtc::decode(vr::vrtc::encode(vr::vrtc::to_container(n))));
    EXPECT_EQ(std::memcmp(back.data.data(), n.data.data(), 16), 0);
}

TEST(Container, RejectsMalformedInput) {
    const auto good = vr::vrtc::encode(vr::vrtc::to_container(vrtest::random_video(1, 2, 2, 3, 1)));

    auto bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_THROW(vr::vrtc::decode(bad_magic), vr::FileFormatError);

    auto bad_version = good;
    bad_version[4] = 2;
    EXPECT_THROW(vr::vrtc::decode(bad_version), vr::FileFormatError);

    auto bad_dtype = good;
    bad_dtype[5] = 7;
    EXPECT_THROW(vr::vrtc::decode(bad_dtype), vr::FileFormatError);

    auto truncated = good;
    truncated.pop_back();
    EXPECT_THROW(vr::vrtc::decode(truncated), vr::FileFormatError);

    auto trailing = good;
    trailing.push_back(0);
    EXPECT_THROW(vr::vrtc::decode(trailing), vr::FileFormatError);

    EXPECT_THROW(vr::vrtc::decode(std::vector<std::uint8_t>{'V', 'R'}), vr::FileFormatError);
}

TEST(Container, TypedReadersCheckKindAndRank) {
    const auto video = vr::vrtc::to_container(vrtest::random_video(1, 2, 2, 3, 1));
    EXPECT_THROW(vr::vrtc::noise_from(video), vr::FileFormatError);
    EXPECT_THROW(vr::vrtc::mask_from(video), vr::FileFormatError);

    vr::MaskVolume m(1, 2, 2);
    auto c = vr::vrtc::to_container(m);
    c.payload[0] = 2;
    EXPECT_THROW(vr::vrtc::mask_from(c), vr::FileFormatError);

    vr::vrtc::Container plane{vr::vrtc::DType::u8, {3, 4}, std::vector<std::uint8_t>(12, 1)};
    const auto single = vr::vrtc::mask_from(plane);
    EXPECT_EQ(single.frames, 1u);
    EXPECT_EQ(single.count_set(), 12u);
}

TEST(Container, MissingFileIsFormatError) {
    EXPECT_THROW(vr::vrtc::read_file("/nonexistent/dir/x.vrtc"), vr::FileFormatError);
}
