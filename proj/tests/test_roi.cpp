#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "medcap/core/error.hpp"
#include "medcap/core/image_io.hpp"
#include "medcap/roi/detector.hpp"

using namespace medcap;
using namespace medcap::roi;
namespace fs = std::filesystem;

namespace {

Image skin_canvas(int w, int h) {
    Image img = Image::make(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = 228;
            img.at(x, y, 1) = 196;
            img.at(x, y, 2) = 177;
        }
    return img;
}

void paint(Image& img, const BBox& b, std::uint8_t r, std::uint8_t g, std::uint8_t bl) {
    for (int y = b.y0; y <= b.y1; ++y)
        for (int x = b.x0; x <= b.x1; ++x) {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = bl;
        }
}

fs::path temp_root(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("medcap_roi_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("baseline detector finds a single contrasting blob") {
    Image img = skin_canvas(256, 256);
    paint(img, BBox{60, 60, 99, 99}, 150, 40, 45);
    DetectorSpec spec;
    auto boxes = detect_lesions(img, spec);
    REQUIRE(boxes.size() == 1);
    CHECK(iou(boxes[0], BBox{60, 60, 99, 99}) >= 0.5);
    CHECK(boxes[0] == BBox{60, 60, 99, 99});  // exact for a solid rectangle
    CHECK(boxes[0].within(256, 256));

    // deterministic
    CHECK(detect_lesions(img, spec) == boxes);
}

TEST_CASE("baseline detector on a blank image") {
    DetectorSpec spec;
    CHECK(detect_lesions(skin_canvas(128, 128), spec).empty());
    CHECK_THROWS_AS(detect_lesions(Image{}, spec), Error);
}

TEST_CASE("two blobs come back larger first") {
    Image img = skin_canvas(256, 256);
    paint(img, BBox{150, 150, 169, 169}, 60, 90, 160);  // 400 px
    paint(img, BBox{20, 20, 59, 59}, 150, 40, 45);      // 1600 px
    DetectorSpec spec;
    auto boxes = detect_lesions(img, spec);
    REQUIRE(boxes.size() == 2);
    CHECK(boxes[0] == BBox{20, 20, 59, 59});
    CHECK(boxes[1] == BBox{150, 150, 169, 169});
}

TEST_CASE("min_area filters specks") {
    Image img = skin_canvas(256, 256);
    paint(img, BBox{10, 10, 14, 14}, 150, 40, 45);  // 25 px < default 64
    DetectorSpec spec;
    CHECK(detect_lesions(img, spec).empty());
    spec.min_area = 9;
    CHECK(detect_lesions(img, spec).size() == 1);
}

TEST_CASE("detector spec parsing") {
    auto spec = DetectorSpec::from_json(
        json{{"kind", "baseline_color_blob"}, {"params", {{"tau", 9.5}, {"min_area", 32}}}});
    CHECK(spec.tau == doctest::Approx(9.5));
    CHECK(spec.min_area == 32);
    CHECK_THROWS_AS(DetectorSpec::from_json(json{{"kind", "external"}}), Error);
    CHECK_THROWS_AS(DetectorSpec::from_json(json{{"kind", "cnn"}}), Error);
    auto ext = DetectorSpec::from_json(json{{"kind", "external"}, {"external_command", "./d"}});
    CHECK(ext.kind == DetectorKind::external);
    // round trip
    auto back = DetectorSpec::from_json(spec.to_json());
    CHECK(back.min_area == spec.min_area);
}

TEST_CASE("external detector protocol") {
    auto root = temp_root("external");
    Image img = skin_canvas(64, 64);
    const auto img_path = root / "img.png";
    save_png(img, img_path);

    const auto script = root / "detector.sh";
    std::ofstream(script) << "#!/bin/sh\necho '10 10 20 20'\necho '5 5 8 8'\n";
    fs::permissions(script, fs::perms::owner_all);
    DetectorSpec spec;
    spec.kind = DetectorKind::external;
    spec.external_command = script.string();
    auto boxes = detect_lesions(img, spec, img_path);
    REQUIRE(boxes.size() == 2);
    CHECK(boxes[0] == BBox{10, 10, 20, 20});  // larger first
    CHECK(boxes[1] == BBox{5, 5, 8, 8});

    const auto bad = root / "bad.sh";
    std::ofstream(bad) << "#!/bin/sh\necho 'model exploded' >&2\nexit 3\n";
    fs::permissions(bad, fs::perms::owner_all);
    spec.external_command = bad.string();
    try {
        detect_lesions(img, spec, img_path);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::backend);
        CHECK(std::string(e.what()).find("model exploded") != std::string::npos);
    }

    const auto garbled = root / "garbled.sh";
    std::ofstream(garbled) << "#!/bin/sh\necho 'one two'\n";
    fs::permissions(garbled, fs::perms::owner_all);
    spec.external_command = garbled.string();
    CHECK_THROWS_AS(detect_lesions(img, spec, img_path), Error);
}

TEST_CASE("attach_regions fills region-less records") {
    auto root = temp_root("attach");
    fs::create_directories(root / "images");
    Image with_blob = skin_canvas(256, 256);
    paint(with_blob, BBox{60, 60, 99, 99}, 150, 40, 45);
    save_png(with_blob, root / "images/lesion.png");
    save_png(skin_canvas(128, 128), root / "images/clear.png");

    ingest::Manifest m;
    m.dataset_id = DatasetId::skincon;
    m.image_root = "images";
    ingest::ImageRecord a;
    a.image_id = "lesion";
    a.image_ref = "lesion.png";
    a.modality = Modality::photo;
    a.width = 256;
    a.height = 256;
    a.attributes = {{"erythema", AttrState::present}};
    ingest::ImageRecord b = a;
    b.image_id = "clear";
    b.image_ref = "clear.png";
    b.width = 128;
    b.height = 128;
    ingest::ImageRecord pre = a;
    pre.image_id = "preboxed";
    ingest::RegionRecord existing;
    existing.region_id = "preboxed:r0";
    existing.bbox = BBox{1, 1, 9, 9};
    pre.regions = {existing};
    m.records = {a, b, pre};

    DetectorSpec spec;
    ValidationReport report;
    auto out = attach_regions(m, spec, root, report);

    const auto* lesion = out.find_image("lesion");
    REQUIRE(lesion != nullptr);
    REQUIRE(lesion->regions.size() == 1);
    CHECK(lesion->regions[0].region_id == "lesion:roi0");
    CHECK(lesion->regions[0].bbox == BBox{60, 60, 99, 99});
    CHECK(lesion->regions[0].pathology_labels.empty());
    CHECK(lesion->regions[0].attributes.at("erythema") == AttrState::present);

    const auto* clear = out.find_image("clear");
    REQUIRE(clear != nullptr);
    CHECK(clear->regions.empty());
    bool no_roi = false;
    for (const auto& e : report.entries)
        no_roi |= e.record_id == "clear" && e.reason.find("no ROI") != std::string::npos;
    CHECK(no_roi);

    const auto* preboxed = out.find_image("preboxed");
    REQUIRE(preboxed != nullptr);
    REQUIRE(preboxed->regions.size() == 1);
    CHECK(preboxed->regions[0].region_id == "preboxed:r0");

    // idempotence: a second pass changes nothing
    ValidationReport report2;
    auto twice = attach_regions(out, spec, root, report2);
    CHECK(ingest::serialize_manifest(twice) == ingest::serialize_manifest(out));
}
