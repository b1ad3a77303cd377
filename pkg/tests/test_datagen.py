import json

import numpy as np
import pytest

from treeseg import datagen
from treeseg.datagen import (
    ClassSpec,
    PartSpec,
    SceneSpec,
    class_frequency,
    default_scene,
    generate_dataset,
    load_dataset,
    part_table,
    save_dataset,
    texture_probe_scene,
)
from treeseg.errors import CorruptManifest, EmptyDataset, InvalidSpec, MissingFile


def square_scene(size=(8, 8), canvas=(64, 64), objects=(1, 1), seed=7):
    """One class drawing a single flat square; no ignore rim."""
    classes = (
        ClassSpec(0, "background", parts=(PartSpec("base", color=(0.2, 0.2, 0.2)),)),
        ClassSpec(1, "square", size=size, parts=(PartSpec("block", color=(0.9, 0.3, 0.2)),)),
    )
    return SceneSpec(
        image_size=canvas,
        classes=classes,
        background_class_id=0,
        objects_per_image=objects,
        noise_std=0.0,
        seed=seed,
        ignore_border=0,
    )


class TestGeneration:
    def test_deterministic_rerun(self):
        spec = default_scene(seed=5)
        a = generate_dataset(spec, 4)
        b = generate_dataset(spec, 4)
        for sa, sb in zip(a, b):
            assert np.array_equal(sa.image, sb.image)
            assert np.array_equal(sa.label, sb.label)
            assert np.array_equal(sa.parts, sb.parts)
            assert np.array_equal(sa.ignore, sb.ignore)

    def test_prefix_stability(self):
        """Sample i does not depend on how many samples are requested."""
        spec = default_scene(seed=5)
        short = generate_dataset(spec, 2)
        long = generate_dataset(spec, 6)
        for sa, sb in zip(short, long):
            assert np.array_equal(sa.image, sb.image)
            assert np.array_equal(sa.label, sb.label)

    def test_no_objects_means_all_background(self):
        spec = default_scene(seed=2, objects_per_image=(0, 0))
        for s in generate_dataset(spec, 3):
            assert np.all(s.label == spec.background_class_id)

    def test_planted_square_frequency_exact(self):
        spec = square_scene()
        samples = generate_dataset(spec, 100)
        for s in samples:
            freq = class_frequency([s], num_classes=2)
            assert freq[1] == 64 / 4096
            assert freq[0] == 1 - 64 / 4096

    def test_frequencies_partition(self):
        samples = generate_dataset(default_scene(seed=3), 20)
        freq = class_frequency(samples, num_classes=6)
        assert np.all(freq >= 0)
        assert abs(freq.sum() - 1.0) <= 1e-9

    def test_part_class_consistency(self):
        spec = default_scene(seed=9)
        owner = {row["part_id"]: row["class_id"] for row in part_table(spec)}
        for s in generate_dataset(spec, 6):
            for pid in np.unique(s.parts):
                if pid == datagen.NO_PART:
                    continue
                assert np.all(s.label[s.parts == pid] == owner[int(pid)])

    def test_ignore_border_marks_boundaries(self):
        spec = default_scene(seed=4)
        assert spec.ignore_border == 1
        for s in generate_dataset(spec, 3):
            dv = s.label[1:, :] != s.label[:-1, :]
            assert s.ignore[1:, :][dv].all()
            assert s.ignore[:-1, :][dv].all()

    def test_images_are_quantized(self):
        s = generate_dataset(default_scene(seed=1), 1)[0]
        assert np.array_equal(
            s.image, (np.round(s.image.astype(np.float64) * 255) / 255).astype(np.float32)
        )


class TestSpecValidation:
    def test_small_canvas_rejected(self):
        spec = square_scene(canvas=(16, 16))
        with pytest.raises(InvalidSpec):
            generate_dataset(spec, 1)

    def test_noncontiguous_ids_rejected(self):
        bad = SceneSpec(
            image_size=(64, 64),
            classes=(
                ClassSpec(0, "bg", parts=(PartSpec("base"),)),
                ClassSpec(2, "obj", size=(8, 8), parts=(PartSpec("p"),)),
            ),
            background_class_id=0,
            objects_per_image=(1, 1),
            noise_std=0.0,
            seed=0,
        )
        with pytest.raises(InvalidSpec):
            generate_dataset(bad, 1)

    def test_partless_class_rejected(self):
        bad = SceneSpec(
            image_size=(64, 64),
            classes=(
                ClassSpec(0, "bg", parts=(PartSpec("base"),)),
                ClassSpec(1, "obj", size=(8, 8), parts=()),
            ),
            background_class_id=0,
            objects_per_image=(1, 1),
            noise_std=0.0,
            seed=0,
        )
        with pytest.raises(InvalidSpec):
            generate_dataset(bad, 1)

    def test_no_unique_foreground_part_rejected(self):
        shared = PartSpec("blob", color=(0.5, 0.5, 0.5))
        bad = SceneSpec(
            image_size=(64, 64),
            classes=(
                ClassSpec(0, "bg", parts=(PartSpec("base"),)),
                ClassSpec(1, "a", size=(8, 8), parts=(shared,)),
                ClassSpec(2, "b", size=(8, 8), parts=(shared,)),
            ),
            background_class_id=0,
            objects_per_image=(1, 1),
            noise_std=0.0,
            seed=0,
        )
        with pytest.raises(InvalidSpec):
            generate_dataset(bad, 1)

    def test_bad_count(self):
        with pytest.raises(InvalidSpec):
            generate_dataset(square_scene(), 0)


class TestPersistence:
    def test_round_trip_identity(self, tmp_path):
        spec = default_scene(seed=6)
        samples = generate_dataset(spec, 10)
        manifest = save_dataset(samples, tmp_path, spec)
        assert manifest.name == "manifest.json"
        back = load_dataset(tmp_path)
        assert len(back) == 10
        assert back.class_names == [c.name for c in spec.classes]
        assert back.spec == spec
        for a, b in zip(samples, back):
            assert np.array_equal(a.image, b.image)
            assert np.array_equal(a.label, b.label)
            assert np.array_equal(a.parts, b.parts)
            assert np.array_equal(a.ignore, b.ignore)

    def test_manifest_exposes_class_count(self, tmp_path):
        spec = texture_probe_scene(seed=1)
        save_dataset(generate_dataset(spec, 2), tmp_path, spec)
        back = load_dataset(tmp_path)
        assert back.num_classes == 3

    def test_empty_directory_is_corrupt(self, tmp_path):
        with pytest.raises(CorruptManifest):
            load_dataset(tmp_path)

    def test_missing_image_file(self, tmp_path):
        spec = square_scene()
        save_dataset(generate_dataset(spec, 2), tmp_path, spec)
        (tmp_path / "images" / "1.png").unlink()
        with pytest.raises(MissingFile):
            load_dataset(tmp_path)

    def test_manifest_missing_key(self, tmp_path):
        spec = square_scene()
        save_dataset(generate_dataset(spec, 1), tmp_path, spec)
        doc = json.loads((tmp_path / "manifest.json").read_text())
        del doc["classes"]
        (tmp_path / "manifest.json").write_text(json.dumps(doc))
        with pytest.raises(CorruptManifest):
            load_dataset(tmp_path)

    def test_unquantized_image_refused(self, tmp_path):
        spec = square_scene()
        s = generate_dataset(spec, 1)[0]
        s.image = s.image + np.float32(1e-4)
        with pytest.raises(InvalidSpec):
            save_dataset([s], tmp_path, spec)


class TestFrequencies:
    def test_all_background_single_sample(self):
        s = generate_dataset(default_scene(seed=2, objects_per_image=(0, 0)), 1)[0]
        freq = class_frequency([s], num_classes=6)
        assert freq[0] == 1.0

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            class_frequency([])

    def test_ignore_pixels_excluded(self):
        s = generate_dataset(square_scene(), 1)[0]
        s.ignore = s.label == 1  # mask out the object entirely
        freq = class_frequency([s], num_classes=2)
        assert freq[0] == 1.0 and freq[1] == 0.0
