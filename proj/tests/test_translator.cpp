#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "genn2n/error.hpp"
#include "genn2n/metrics.hpp"
#include "genn2n/rng.hpp"
#include "genn2n/scene.hpp"
#include "genn2n/translator.hpp"

using namespace genn2n;

namespace {

std::vector<Image> render_sources(int n_views, int size) {
  AnalyticScene scene = default_scene();
  RingConfig ring;
  ring.width = size;
  ring.height = size;
  ring.focal = 1.1 * size;
  auto poses = make_camera_ring(n_views, ring, scene);
  std::vector<Image> out;
  for (const auto& p : poses) out.push_back(render_ground_truth(scene, p, 128));
  return out;
}

Image constant_image(int size, double r, double g, double b) {
  Image img(size, size);
  for (size_t p = 0; p < img.pixel_count(); ++p) {
    img.data[p * 3 + 0] = r;
    img.data[p * 3 + 1] = g;
    img.data[p * 3 + 2] = b;
  }
  return img;
}

// greedy circular clustering of per-edit mean hues
int count_hue_clusters(const std::vector<double>& hues, double tol = 0.35) {
  std::vector<double> centers;
  for (double h : hues) {
    bool found = false;
    for (double c : centers) {
      if (circ_dist(h, c) < tol) {
        found = true;
        break;
      }
    }
    if (!found) centers.push_back(h);
  }
  return static_cast<int>(centers.size());
}

}  // namespace

TEST_CASE("grayscale: coefficients, gray fixpoint, idempotence") {
  Image red = constant_image(4, 1.0, 0.0, 0.0);
  Image g1 = grayscale(red);
  CHECK(g1.data[0] == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(g1.data[1] == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(g1.data[2] == doctest::Approx(0.299).epsilon(1e-12));

  Image gray = constant_image(4, 0.42, 0.42, 0.42);
  Image g2 = grayscale(gray);
  for (size_t i = 0; i < g2.data.size(); ++i) CHECK(g2.data[i] == 0.42);

  Image g3 = grayscale(g1);  // idempotent (exactly, via the gray fast path)
  for (size_t i = 0; i < g1.data.size(); ++i) CHECK(g3.data[i] == g1.data[i]);
}

TEST_CASE("downscale: box means, divisibility error") {
  Image img(4, 2);
  // left 2x2 block = {0,0,1,1} pattern in every channel, right block = 0.25
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double v = x < 2 ? ((x + y) % 2 == 0 ? 0.0 : 1.0) : 0.25;
      for (int c = 0; c < 3; ++c) img.px(x, y)[c] = v;
    }
  }
  Image down = downscale(img, 2);
  REQUIRE(down.width == 2);
  REQUIRE(down.height == 1);
  CHECK(down.px(0, 0)[0] == doctest::Approx(0.5));
  CHECK(down.px(1, 0)[0] == doctest::Approx(0.25));

  Image constant = constant_image(8, 0.3, 0.6, 0.9);
  Image dc = downscale(constant, 4);
  for (size_t i = 0; i < dc.data.size(); i += 3) CHECK(dc.data[i] == doctest::Approx(0.3));

  CHECK_THROWS_AS(downscale(Image(5, 4), 2), Error);
}

TEST_CASE("downscale o upscale o downscale = downscale (exact with nearest)") {
  auto sources = render_sources(2, 16);
  for (const auto& src : sources) {
    Image d1 = downscale(src, 4);
    Image d2 = downscale(upscale_nearest(d1, 4), 4);
    REQUIRE(d1.data.size() == d2.data.size());
    for (size_t i = 0; i < d1.data.size(); ++i) CHECK(d1.data[i] == d2.data[i]);
  }
}

TEST_CASE("translate determinism: same seed bit-identical, different seed differs") {
  auto sources = render_sources(3, 16);
  TranslatorSpec spec;
  spec.task = TranslateTask::stylize;
  spec.mode_count = 3;
  spec.epsilon = 0.2;
  EditedImageSet a = translate(spec, sources, 3, 42);
  EditedImageSet b = translate(spec, sources, 3, 42);
  EditedImageSet c = translate(spec, sources, 3, 43);
  bool identical = true, differs = false;
  for (int i = 0; i < a.n_views(); ++i) {
    for (int j = 0; j < a.n_edits(); ++j) {
      const auto& ia = a.edits[static_cast<size_t>(i)][static_cast<size_t>(j)].data;
      const auto& ib = b.edits[static_cast<size_t>(i)][static_cast<size_t>(j)].data;
      const auto& ic = c.edits[static_cast<size_t>(i)][static_cast<size_t>(j)].data;
      for (size_t p = 0; p < ia.size(); ++p) {
        identical = identical && (ia[p] == ib[p]);
        differs = differs || (ia[p] != ic[p]);
      }
    }
  }
  CHECK(identical);
  CHECK(differs);
  CHECK(a.seed_table == b.seed_table);
}

TEST_CASE("epsilon=0 on a constant-color scene: same j is pixel-identical across views") {
  std::vector<Image> sources(4, constant_image(16, 0.4, 0.5, 0.6));
  for (TranslateTask task : {TranslateTask::stylize, TranslateTask::colorize}) {
    TranslatorSpec spec;
    spec.task = task;
    spec.mode_count = 2;
    spec.epsilon = 0.0;
    EditedImageSet set = translate(spec, sources, 3, 7);
    for (int j = 0; j < set.n_edits(); ++j) {
      for (int i = 1; i < set.n_views(); ++i) {
        const auto& a = set.edits[0][static_cast<size_t>(j)].data;
        const auto& b = set.edits[static_cast<size_t>(i)][static_cast<size_t>(j)].data;
        for (size_t p = 0; p < a.size(); ++p) CHECK(a[p] == b[p]);
      }
    }
  }
}

TEST_CASE("mode structure: mean-hue clusters = min(mode_count, M) at epsilon=0") {
  auto sources = render_sources(2, 16);
  for (TranslateTask task :
       {TranslateTask::stylize, TranslateTask::colorize, TranslateTask::inpaint}) {
    for (int mode_count : {1, 2, 3}) {
      for (int M : {1, 2, 4}) {
        TranslatorSpec spec;
        spec.task = task;
        spec.mode_count = mode_count;
        spec.epsilon = 0.0;
        if (task == TranslateTask::inpaint) {
          Image mask(16, 16);
          for (int y = 4; y < 12; ++y) {
            for (int x = 4; x < 12; ++x) {
              mask.px(x, y)[0] = mask.px(x, y)[1] = mask.px(x, y)[2] = 1.0;
            }
          }
          spec.mask = mask;
        }
        EditedImageSet set = translate(spec, sources, M, 11);
        std::vector<double> hues;
        for (int j = 0; j < M; ++j) {
          hues.push_back(mean_hue(set.edits[0][static_cast<size_t>(j)]));
        }
        CHECK(count_hue_clusters(hues) == std::min(mode_count, M));
      }
    }
  }
}

TEST_CASE("mode_count=2, M=4: edits form exactly two hue groups") {
  auto sources = render_sources(2, 16);
  TranslatorSpec spec;
  spec.task = TranslateTask::colorize;
  spec.mode_count = 2;
  spec.epsilon = 0.0;
  EditedImageSet set = translate(spec, sources, 4, 5);
  std::vector<double> hues;
  for (int j = 0; j < 4; ++j) hues.push_back(mean_hue(set.edits[0][static_cast<size_t>(j)]));
  CHECK(count_hue_clusters(hues) == 2);
  // paired structure: j and j+2 share a mode
  CHECK(circ_dist(hues[0], hues[2]) < 0.2);
  CHECK(circ_dist(hues[1], hues[3]) < 0.2);
  CHECK(circ_dist(hues[0], hues[1]) > 0.8);
}

TEST_CASE("cross-view distance is monotone in epsilon") {
  auto sources = render_sources(4, 16);
  for (TranslateTask task : {TranslateTask::stylize, TranslateTask::colorize}) {
    double prev = -1.0;
    for (double eps : {0.0, 0.1, 0.3}) {
      TranslatorSpec spec;
      spec.task = task;
      spec.mode_count = 2;
      spec.epsilon = eps;
      EditedImageSet set = translate(spec, sources, 2, 33);
      double acc = 0.0;
      int count = 0;
      for (int j = 0; j < set.n_edits(); ++j) {
        for (int i = 1; i < set.n_views(); ++i) {
          acc += mean_abs_diff(set.edits[0][static_cast<size_t>(j)],
                               set.edits[static_cast<size_t>(i)][static_cast<size_t>(j)]);
          ++count;
        }
      }
      const double avg = acc / count;
      CHECK(avg >= prev);
      prev = avg;
    }
  }
}

TEST_CASE("super-resolve: valid scales only; output keeps source dims") {
  auto sources = render_sources(2, 16);
  TranslatorSpec spec;
  spec.task = TranslateTask::super_resolve;
  spec.mode_count = 2;
  spec.sr_scale = 4;
  EditedImageSet set = translate(spec, sources, 2, 9);
  CHECK(set.edits[0][0].width == 16);
  CHECK(set.edits[0][0].height == 16);
  // different sharpening modes produce different edits
  CHECK(mean_abs_diff(set.edits[0][0], set.edits[0][1]) > 1e-4);

  spec.sr_scale = 3;
  CHECK_THROWS_AS(translate(spec, sources, 2, 9), Error);
}

TEST_CASE("inpaint: mask required; unmasked pixels bit-equal to the source") {
  auto sources = render_sources(2, 16);
  TranslatorSpec spec;
  spec.task = TranslateTask::inpaint;
  spec.mode_count = 2;
  CHECK_THROWS_AS(translate(spec, sources, 2, 3), Error);

  Image mask(16, 16);
  for (int y = 6; y < 13; ++y) {
    for (int x = 2; x < 9; ++x) mask.px(x, y)[0] = mask.px(x, y)[1] = mask.px(x, y)[2] = 1.0;
  }
  spec.mask = mask;
  EditedImageSet set = translate(spec, sources, 2, 3);
  for (int i = 0; i < set.n_views(); ++i) {
    for (int j = 0; j < set.n_edits(); ++j) {
      const Image& edit = set.edits[static_cast<size_t>(i)][static_cast<size_t>(j)];
      const Image& src = sources[static_cast<size_t>(i)];
      double masked_diff = 0.0;
      for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
          const bool in_mask = mask.px(x, y)[0] > 0.5;
          for (int c = 0; c < 3; ++c) {
            if (in_mask) {
              masked_diff += std::abs(edit.px(x, y)[c] - src.px(x, y)[c]);
            } else {
              CHECK(edit.px(x, y)[c] == src.px(x, y)[c]);
            }
          }
        }
      }
      CHECK(masked_diff > 0.1);  // the fill actually painted something
    }
  }
  // mask dims must match
  spec.mask = Image(8, 8);
  CHECK_THROWS_AS(translate(spec, sources, 2, 3), Error);
}

TEST_CASE("translate argument validation") {
  auto sources = render_sources(2, 16);
  TranslatorSpec spec;
  CHECK_THROWS_AS(translate(spec, sources, 0, 1), Error);
  CHECK_THROWS_AS(translate(spec, {}, 2, 1), Error);
  spec.mode_count = 0;
  CHECK_THROWS_AS(translate(spec, sources, 2, 1), Error);
  spec.mode_count = 2;
  spec.epsilon = -0.1;
  CHECK_THROWS_AS(translate(spec, sources, 2, 1), Error);
}

TEST_CASE("edited set persists and reloads through PPM") {
  auto sources = render_sources(3, 16);
  TranslatorSpec spec;
  spec.task = TranslateTask::colorize;
  spec.mode_count = 2;
  spec.epsilon = 0.1;
  EditedImageSet set = translate(spec, sources, 3, 77);
  const std::string root =
      (std::filesystem::temp_directory_path() / "genn2n_edits").string();
  std::filesystem::remove_all(root);
  save_edited_set(set, root);
  CHECK(std::filesystem::exists(root + "/manifest.txt"));
  CHECK(std::filesystem::exists(root + "/view_000/edit_00.ppm"));
  CHECK(std::filesystem::exists(root + "/view_002/edit_02.ppm"));

  EditedImageSet back = load_edited_set(root);
  CHECK(back.task == "colorize");
  CHECK(back.seed == 77);
  CHECK(back.mode_count == 2);
  CHECK(back.n_views() == 3);
  CHECK(back.n_edits() == 3);
  CHECK(back.seed_table == set.seed_table);
  // PPM quantizes, so values match to half a step
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double max_diff = 0.0;
      const auto& ea = set.edits[static_cast<size_t>(i)][static_cast<size_t>(j)].data;
      const auto& eb = back.edits[static_cast<size_t>(i)][static_cast<size_t>(j)].data;
      for (size_t p = 0; p < ea.size(); ++p) {
        max_diff = std::max(max_diff, std::abs(ea[p] - eb[p]));
      }
      CHECK(max_diff <= 0.5 / 255.0 + 1e-12);
    }
  }
  std::filesystem::remove_all(root);
}
