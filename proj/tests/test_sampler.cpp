#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "medcap/core/error.hpp"
#include "medcap/core/rng.hpp"
#include "medcap/sampler/focal.hpp"
#include "medcap/sampler/geometry.hpp"
#include "medcap/sampler/sampling.hpp"
#include "medcap/sampler/slice_select.hpp"

using namespace medcap;
using namespace medcap::sampler;
using medcap::ingest::ImageRecord;
using medcap::ingest::RegionRecord;
using medcap::ingest::VolumeAnnotation;
using medcap::ingest::VolumeRecord;

TEST_CASE("mask_to_bbox") {
    Image m = Image::make(16, 16, 1);
    m.at(5, 7) = 255;
    CHECK(mask_to_bbox(m) == BBox{5, 7, 5, 7});

    m.at(3, 4) = 1;
    m.at(7, 9) = 1;
    CHECK(mask_to_bbox(m) == BBox{3, 4, 7, 9});

    CHECK_THROWS_AS(mask_to_bbox(Image::make(8, 8, 1)), Error);
}

TEST_CASE("mask_to_bbox tightness and oracle fuzz") {
    Rng rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 4 + static_cast<int>(rng.bounded(28));
        const int h = 4 + static_cast<int>(rng.bounded(28));
        Image m = Image::make(w, h, 1);
        const int n = 1 + static_cast<int>(rng.bounded(20));
        int min_x = w, min_y = h, max_x = -1, max_y = -1;
        for (int i = 0; i < n; ++i) {
            const int x = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(w)));
            const int y = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(h)));
            m.at(x, y) = 255;
            min_x = std::min(min_x, x);
            min_y = std::min(min_y, y);
            max_x = std::max(max_x, x);
            max_y = std::max(max_y, y);
        }
        const BBox box = mask_to_bbox(m);
        CHECK(box == BBox{min_x, min_y, max_x, max_y});
        // every edge touches a set pixel
        bool left = false, right = false, top = false, bottom = false;
        for (int y = box.y0; y <= box.y1; ++y) {
            left |= m.at(box.x0, y) != 0;
            right |= m.at(box.x1, y) != 0;
        }
        for (int x = box.x0; x <= box.x1; ++x) {
            top |= m.at(x, box.y0) != 0;
            bottom |= m.at(x, box.y1) != 0;
        }
        CHECK(left);
        CHECK(right);
        CHECK(top);
        CHECK(bottom);
    }
}

TEST_CASE("expand_bbox worked values") {
    CHECK(expand_bbox(BBox{100, 100, 200, 200}, 0.0, 1024, 1024) == BBox{100, 100, 200, 200});
    CHECK(expand_bbox(BBox{100, 100, 200, 200}, 0.10, 1024, 1024) == BBox{95, 95, 205, 205});
    CHECK(expand_bbox(BBox{0, 0, 100, 100}, 0.10, 1024, 1024) == BBox{0, 0, 105, 105});
    CHECK(expand_bbox(BBox{100, 100, 200, 200}, 0.15, 1024, 1024) == BBox{93, 93, 207, 207});
    CHECK_THROWS_AS(expand_bbox(BBox{0, 0, 10, 10}, -0.1, 64, 64), Error);
    CHECK_THROWS_AS(expand_bbox(BBox{0, 0, 64, 10}, 0.1, 64, 64), Error);
}

TEST_CASE("expand_bbox containment fuzz") {
    Rng rng(77);
    for (int trial = 0; trial < 10000; ++trial) {
        const int w = 2 + static_cast<int>(rng.bounded(510));
        const int h = 2 + static_cast<int>(rng.bounded(510));
        BBox b;
        b.x0 = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(w)));
        b.y0 = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(h)));
        b.x1 = b.x0 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(w - b.x0)));
        b.y1 = b.y0 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(h - b.y0)));
        const double margin = static_cast<double>(rng.bounded(50)) / 100.0;
        const BBox e = expand_bbox(b, margin, w, h);
        CHECK(e.contains(b));
        CHECK(e.within(w, h));
    }
}

TEST_CASE("letterbox worked values") {
    Image wide = Image::make(200, 100, 3, 50);
    auto lb = letterbox_resize(wide, 512);
    CHECK(lb.transform.scale == doctest::Approx(2.56));
    CHECK(lb.transform.content_w == 512);
    CHECK(lb.transform.content_h == 256);
    CHECK(lb.transform.pad_left == 0);
    CHECK(lb.transform.pad_top == 128);
    CHECK(lb.image.width == 512);
    CHECK(lb.image.height == 512);
    CHECK(lb.image.at(0, 0, 0) == 0);    // pad
    CHECK(lb.image.at(0, 127, 0) == 0);  // last pad row above content
    CHECK(lb.image.at(0, 128, 0) == 50);
    CHECK(lb.image.at(0, 383, 0) == 50);
    CHECK(lb.image.at(0, 384, 0) == 0);  // pad resumes

    Image square = Image::make(512, 512, 1, 9);
    auto lb2 = letterbox_resize(square, 512);
    CHECK(lb2.transform.scale == doctest::Approx(1.0));
    CHECK(lb2.transform.pad_left == 0);
    CHECK(lb2.transform.pad_top == 0);
    CHECK(lb2.image.data == square.data);

    Image tall = Image::make(100, 200, 1, 7);
    auto lb3 = letterbox_resize(tall, 512, 3);
    CHECK(lb3.transform.content_w == 256);
    CHECK(lb3.transform.content_h == 512);
    CHECK(lb3.transform.pad_left == 128);
    CHECK(lb3.transform.pad_top == 0);
    CHECK(lb3.image.at(0, 0, 0) == 3);  // configured pad value
    CHECK(lb3.image.at(128, 0, 0) == 7);

    CHECK_THROWS_AS(letterbox_resize(Image{}, 512), Error);
    CHECK_THROWS_AS(letterbox_resize(square, 0), Error);
}

TEST_CASE("letterbox aspect preservation bound") {
    Rng rng(5150);
    const int S = 512;
    for (int trial = 0; trial < 300; ++trial) {
        const int w = 1 + static_cast<int>(rng.bounded(900));
        const int h = 1 + static_cast<int>(rng.bounded(900));
        auto lb = letterbox_resize(Image::make(w, h, 1), S);
        CHECK(std::max(lb.transform.content_w, lb.transform.content_h) == S);
        const double got = static_cast<double>(lb.transform.content_w) / lb.transform.content_h;
        const double want = static_cast<double>(w) / h;
        CHECK(std::abs(got - want) <= 2.0 / S * std::max(want * want, 1.0) + 1e-9);
    }
}

namespace {

// loader fabricating masks from ref strings shaped "AREAxN" (N pixels set)
Image synthetic_mask(const std::string& ref) {
    Image m = Image::make(32, 32, 1);
    const std::size_t n = std::stoul(ref.substr(ref.find('x') + 1));
    for (std::size_t i = 0; i < n; ++i)
        m.data[i] = 255;
    return m;
}

VolumeAnnotation ann(const std::string& radiologist, const std::string& nodule,
                     std::map<int, std::string> masks) {
    VolumeAnnotation a;
    a.radiologist_id = radiologist;
    a.nodule_id = nodule;
    a.slice_masks = std::move(masks);
    return a;
}

}  // namespace

TEST_CASE("select_slice consensus example") {
    VolumeRecord vol;
    vol.scan_id = "s1";
    vol.slice_count = 20;
    vol.annotations = {
        ann("r1", "n1", {{10, "mx5"}, {11, "mx5"}, {12, "mx5"}}),
        ann("r2", "n1", {{11, "mx5"}, {12, "mx5"}}),
        ann("r3", "n1", {{11, "mx5"}}),
        ann("r4", "n1", {{11, "mx5"}, {12, "mx5"}, {13, "mx5"}}),
    };
    auto sel = select_slice(vol, "n1", synthetic_mask);
    CHECK(sel.slice_index == 11);
    CHECK(sel.agreement == 4);
    CHECK(sel.tiebreak_reason == TiebreakReason::unique_max);
}

TEST_CASE("select_slice single slice") {
    VolumeRecord vol;
    vol.scan_id = "s1";
    vol.slice_count = 64;
    vol.annotations = {ann("r1", "n1", {{42, "mx9"}})};
    auto sel = select_slice(vol, "n1", synthetic_mask);
    CHECK(sel.slice_index == 42);
    CHECK(sel.agreement == 1);
    CHECK(sel.tiebreak_reason == TiebreakReason::unique_max);
}

TEST_CASE("select_slice area tiebreak") {
    VolumeRecord vol;
    vol.scan_id = "s1";
    vol.slice_count = 16;
    // three radiologists on both slices; union areas 120 vs 80
    vol.annotations = {
        ann("r1", "n1", {{4, "mx120"}, {9, "mx80"}}),
        ann("r2", "n1", {{4, "mx120"}, {9, "mx80"}}),
        ann("r3", "n1", {{4, "mx120"}, {9, "mx80"}}),
    };
    auto sel = select_slice(vol, "n1", synthetic_mask);
    CHECK(sel.slice_index == 4);
    CHECK(sel.agreement == 3);
    CHECK(sel.tiebreak_reason == TiebreakReason::area);
}

TEST_CASE("select_slice lowest index tiebreak and errors") {
    VolumeRecord vol;
    vol.scan_id = "s1";
    vol.slice_count = 16;
    vol.annotations = {
        ann("r1", "n1", {{7, "mx50"}, {3, "mx50"}}),
        ann("r2", "n1", {{7, "mx50"}, {3, "mx50"}}),
    };
    auto sel = select_slice(vol, "n1", synthetic_mask);
    CHECK(sel.slice_index == 3);
    CHECK(sel.tiebreak_reason == TiebreakReason::lowest_index);

    CHECK_THROWS_AS(select_slice(vol, "ghost", synthetic_mask), Error);

    VolumeRecord zero;
    zero.scan_id = "s2";
    zero.slice_count = 4;
    zero.annotations = {ann("r1", "n1", {{1, "mx0"}})};  // all-zero mask
    CHECK_THROWS_AS(select_slice(zero, "n1", synthetic_mask), Error);
}

TEST_CASE("select_slice agreement matches brute force on random volumes") {
    Rng rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        VolumeRecord vol;
        vol.scan_id = "s";
        vol.slice_count = 8;
        const int radiologists = 1 + static_cast<int>(rng.bounded(4));
        std::map<int, std::set<std::string>> per_slice;
        for (int r = 0; r < radiologists; ++r) {
            std::map<int, std::string> masks;
            const int k = 1 + static_cast<int>(rng.bounded(4));
            for (int i = 0; i < k; ++i) {
                const int slice = static_cast<int>(rng.bounded(8));
                masks[slice] = "mx" + std::to_string(1 + rng.bounded(30));
            }
            const std::string rid = "r" + std::to_string(r);
            for (const auto& [s, _] : masks) per_slice[s].insert(rid);
            vol.annotations.push_back(ann(rid, "n1", std::move(masks)));
        }
        std::size_t best = 0;
        for (const auto& [_, who] : per_slice) best = std::max(best, who.size());
        auto sel = select_slice(vol, "n1", synthetic_mask);
        CHECK(sel.agreement == static_cast<int>(best));
        CHECK(per_slice.at(sel.slice_index).size() == best);
    }
}

TEST_CASE("union_mask_for_slice merges radiologists") {
    VolumeRecord vol;
    vol.scan_id = "s1";
    vol.slice_count = 8;
    vol.annotations = {ann("r1", "n1", {{2, "mx10"}}), ann("r2", "n1", {{2, "mx25"}})};
    Image u = union_mask_for_slice(vol, "n1", 2, synthetic_mask);
    CHECK(u.count_nonzero() == 25);  // refs overlap on the first pixels
    CHECK_THROWS_AS(union_mask_for_slice(vol, "n1", 5, synthetic_mask), Error);
}

namespace {

ImageRecord make_record(const std::vector<std::pair<std::string, std::string>>& label_site) {
    ImageRecord rec;
    rec.image_id = "img";
    rec.image_ref = "img.png";
    rec.width = 1000;
    rec.height = 1000;
    int i = 0;
    for (const auto& [label, site] : label_site) {
        RegionRecord r;
        r.region_id = "img:r" + std::to_string(i++);
        r.bbox = BBox{i * 10, i * 10, i * 10 + 5, i * 10 + 5};
        if (!label.empty()) r.pathology_labels.insert(label);
        if (!site.empty()) r.anatomical_site = site;
        rec.regions.push_back(std::move(r));
    }
    return rec;
}

}  // namespace

TEST_CASE("sample_regions passthrough below cap") {
    auto rec = make_record({{"A", ""}, {"B", ""}, {"A", ""}});
    SamplingPolicy policy;
    policy.max_regions = 5;
    policy.seed = 7;
    auto out = sample_regions(rec, policy);
    REQUIRE(out.size() == 3);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].region_id == rec.regions[i].region_id);

    auto empty = sample_regions(make_record({}), policy);
    CHECK(empty.empty());
}

TEST_CASE("sample_regions stratified cap") {
    // 8 regions over labels {A:5, B:3}
    auto rec = make_record(
        {{"A", ""}, {"A", ""}, {"B", ""}, {"A", ""}, {"B", ""}, {"A", ""}, {"B", ""}, {"A", ""}});
    SamplingPolicy policy;
    policy.max_regions = 5;
    policy.seed = 7;
    auto out = sample_regions(rec, policy);
    REQUIRE(out.size() == 5);
    int a = 0, b = 0;
    for (const auto& r : out) (r.pathology_labels.count("A") ? a : b)++;
    CHECK(a >= 2);
    CHECK(b >= 2);

    // identical output on repeated runs with the same seed
    auto again = sample_regions(rec, policy);
    REQUIRE(again.size() == out.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].region_id == out[i].region_id);

    // output preserves input order
    std::vector<std::string> ids;
    for (const auto& r : out) ids.push_back(r.region_id);
    auto sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    CHECK(ids == sorted);  // region ids here are lexicographic in input order
}

TEST_CASE("sample_regions round robin balance within one of each other") {
    auto rec = make_record({{"A", ""}, {"A", ""}, {"A", ""}, {"A", ""},
                            {"B", ""}, {"B", ""}, {"B", ""}, {"B", ""},
                            {"C", ""}, {"C", ""}, {"C", ""}, {"C", ""}});
    SamplingPolicy policy;
    policy.max_regions = 5;
    policy.seed = 11;
    auto out = sample_regions(rec, policy);
    REQUIRE(out.size() == 5);
    std::map<std::string, int> counts;
    for (const auto& r : out) counts[*r.pathology_labels.begin()]++;
    int lo = 99, hi = 0;
    for (const auto& [_, c] : counts) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    CHECK(hi - lo <= 1);
}

TEST_CASE("sample_regions stratify by anatomical site") {
    auto rec = make_record({{"", "arm"}, {"", "arm"}, {"", "leg"}, {"", "leg"},
                            {"", "arm"}, {"", "leg"}, {"", "arm"}});
    SamplingPolicy policy;
    policy.max_regions = 4;
    policy.seed = 3;
    policy.stratify_by = StratifyBy::anatomical_site;
    auto out = sample_regions(rec, policy);
    REQUIRE(out.size() == 4);
    int arm = 0, leg = 0;
    for (const auto& r : out) (*r.anatomical_site == "arm" ? arm : leg)++;
    CHECK(arm == 2);
    CHECK(leg == 2);

    SamplingPolicy bad;
    bad.max_regions = 0;
    CHECK_THROWS_AS(sample_regions(rec, bad), Error);
}

TEST_CASE("build_focal_input vindr margin") {
    Image full = Image::make(1024, 1024, 3, 100);
    RegionRecord region;
    region.region_id = "img:r0";
    region.bbox = BBox{100, 100, 200, 200};
    DatasetGeometry geo{0.10, 512, 0};
    auto fi = build_focal_input(full, region, nullptr, geo);
    CHECK(fi.transform.expanded_bbox == BBox{95, 95, 205, 205});
    CHECK(fi.crop.width == 512);
    CHECK(fi.crop.height == 512);
    CHECK(fi.mask.width == 1024);
    CHECK(fi.mask.height == 1024);
    // mask nonzero exactly inside the expanded bbox
    CHECK(fi.mask.count_nonzero() == 111u * 111u);
    CHECK(fi.mask.at(95, 95) == 255);
    CHECK(fi.mask.at(205, 205) == 255);
    CHECK(fi.mask.at(94, 95) == 0);
    CHECK(fi.mask.at(206, 205) == 0);
}

TEST_CASE("build_focal_input skincon margin") {
    Image full = Image::make(1024, 1024, 3, 100);
    RegionRecord region;
    region.region_id = "img:r0";
    region.bbox = BBox{100, 100, 200, 200};
    DatasetGeometry geo{0.15, 512, 0};
    auto fi = build_focal_input(full, region, nullptr, geo);
    CHECK(fi.transform.expanded_bbox == BBox{93, 93, 207, 207});
}

TEST_CASE("build_focal_input lidc mask passthrough") {
    Image full = Image::make(64, 64, 1, 30);
    Image mask = Image::make(64, 64, 1, 0);
    fill_rect(mask, BBox{10, 12, 20, 22}, 255);
    RegionRecord region;
    region.region_id = "s1:n1";
    region.bbox = mask_to_bbox(mask);
    DatasetGeometry geo{0.0, 128, 0};
    auto fi = build_focal_input(full, region, &mask, geo);
    CHECK(fi.transform.expanded_bbox == mask_to_bbox(mask));
    CHECK(fi.mask.data == mask.data);
    CHECK(fi.crop.width == 128);

    Image bad_mask = Image::make(32, 32, 1, 0);
    CHECK_THROWS_AS(build_focal_input(full, region, &bad_mask, geo), Error);
}

TEST_CASE("synthesize_lidc_regions walks volumes") {
    ingest::Manifest m;
    m.dataset_id = DatasetId::lidc_idri;
    VolumeRecord vol;
    vol.scan_id = "s1";
    vol.slice_count = 8;
    vol.annotations = {ann("r1", "n1", {{2, "mx12"}, {3, "mx12"}}),
                       ann("r2", "n1", {{3, "mx12"}}),
                       ann("r1", "n2", {{5, "mx7"}})};
    vol.nodule_attributes["n1"] = {{"spiculation", AttrState::present}};
    m.volumes = {vol};
    auto drafts = synthesize_lidc_regions(m, synthetic_mask);
    REQUIRE(drafts.size() == 2);
    CHECK(drafts[0].nodule_id == "n1");
    CHECK(drafts[0].selection.slice_index == 3);
    CHECK(drafts[0].selection.agreement == 2);
    CHECK(drafts[0].image_id == "s1:s3");
    CHECK(drafts[0].bbox == mask_to_bbox(drafts[0].union_mask));
    CHECK(drafts[0].attributes.at("spiculation") == AttrState::present);
    CHECK(drafts[1].nodule_id == "n2");
    CHECK(drafts[1].selection.slice_index == 5);
}

TEST_CASE("geometry config file") {
    auto dir = std::filesystem::temp_directory_path() / "medcap_geo";
    std::filesystem::create_directories(dir);
    const auto path = dir / "geometry.json";
    write_json_file(path, json{{"vindr_cxr", {{"margin", 0.10}, {"target_size", 512}, {"pad_value", 0}}},
                               {"lidc_idri", {{"margin", 0.0}, {"target_size", 512}}},
                               {"skincon", {{"margin", 0.15}, {"target_size", 512}}}});
    auto cfg = load_geometry_config(path);
    CHECK(geometry_for(cfg, DatasetId::vindr_cxr).margin == doctest::Approx(0.10));
    CHECK(geometry_for(cfg, DatasetId::lidc_idri).margin == doctest::Approx(0.0));
    CHECK(geometry_for(cfg, DatasetId::skincon).margin == doctest::Approx(0.15));
    CHECK_THROWS_AS(geometry_for(cfg, DatasetId::custom), Error);
}
