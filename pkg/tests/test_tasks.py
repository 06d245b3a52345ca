import cv2
import numpy as np
import pytest

from pymodaq_plugins_hypermaml.app.run_config import RunConfig
from pymodaq_plugins_hypermaml.errors import ConfigError, DatasetError
from pymodaq_plugins_hypermaml.tasks import (CrossDomainFamily, Episode, Gaussian2dFamily, Gaussian2dGeometry,
                                             GlyphConfig, GlyphFamily, N_TASKS, bayes_accuracy, glyph_sample,
                                             load_image_folder, split_classes, split_cross_domain)


def check_episodes(family, split, count, n_way, k_shot, q_per_class):
    for episode in family.episodes(split, count, n_way, k_shot, q_per_class):
        episode.validate()
        assert episode.support_x.shape == (n_way * k_shot,) + family.input_shape
        assert episode.query_x.shape == (n_way * q_per_class,) + family.input_shape
        assert np.all(np.isfinite(episode.support_x.data))


def test_gaussian2d_episodes_are_well_formed():
    check_episodes(Gaussian2dFamily(seed=3), 'train', 200, 2, 5, 7)


@pytest.mark.slow
def test_gaussian2d_episodes_are_well_formed_at_scale():
    check_episodes(Gaussian2dFamily(seed=3), 'train', 10000, 2, 3, 3)


def test_glyph_episodes_are_well_formed():
    family = GlyphFamily(GlyphConfig(n_classes=20, image_size=16), seed=1).split()
    check_episodes(family, 'train', 10, 5, 2, 3)
    episode = next(family.episodes('val', 1, 3, 1, 2))
    assert episode.support_x.data.min() >= 0 and episode.support_x.data.max() <= 1


def test_episode_validate_rejects_bad_counts():
    x = np.zeros((4, 2), dtype=np.float32)
    with pytest.raises(DatasetError):
        Episode(x, [0, 0, 0, 1], x, [0, 0, 1, 1], 2, 2, 2).validate()
    with pytest.raises(DatasetError):
        Episode(x, [0, 0, 1, 2], x, [0, 0, 1, 1], 2, 2, 2).validate()
    with pytest.raises(DatasetError):
        Episode(x[:3], [0, 0, 1, 1], x, [0, 0, 1, 1], 2, 2, 2).validate()


def test_split_classes_is_a_deterministic_partition():
    pool = [f"c{i:02d}" for i in range(50)]
    train, val, test = split_classes(pool, (0.6, 0.2, 0.2), seed=4)
    assert (len(train), len(val), len(test)) == (30, 10, 10)
    assert not (set(train) & set(val) or set(train) & set(test) or set(val) & set(test))
    assert set(train) | set(val) | set(test) == set(pool)
    assert split_classes(reversed(pool), (0.6, 0.2, 0.2), seed=4) == (train, val, test)
    assert split_classes(pool, (0.6, 0.2, 0.2), seed=5) != (train, val, test)


@pytest.mark.parametrize('ratios', [(0.5, 0.5), (0.7, 0.2, 0.2), (1.0, 0.0, 0.0), (0.8, -0.1, 0.3)])
def test_split_classes_refuses_bad_ratios(ratios):
    with pytest.raises(ConfigError):
        split_classes(['a', 'b', 'c', 'd'], ratios)


def test_split_classes_needs_a_class_per_split():
    with pytest.raises(DatasetError):
        split_classes(['a', 'b'], (0.6, 0.2, 0.2))


def test_split_cross_domain():
    source = [f"glyphs:{i}" for i in range(10)]
    target = [f"faces:{i}" for i in range(9)]
    train, val, test = split_cross_domain(source, target, seed=0)
    assert train == sorted(source)
    assert not set(val) & set(test)
    assert set(val) | set(test) == set(target)
    with pytest.raises(DatasetError):
        split_cross_domain(source, source[:4])


def test_cross_domain_family_pools():
    source = GlyphFamily(GlyphConfig(n_classes=12, image_size=16), seed=0)
    target = GlyphFamily(GlyphConfig(n_classes=8, image_size=16), seed=1, name='other')
    family = CrossDomainFamily(source, target, seed=2)
    assert all(ref.startswith('glyphs:') for ref in family.pools['train'])
    assert all(ref.startswith('other:') for ref in family.pools['val'] + family.pools['test'])
    check_episodes(family, 'test', 3, 2, 1, 1)
    with pytest.raises(DatasetError):
        CrossDomainFamily(source, source)


def test_sample_episode_does_not_depend_on_order():
    family = Gaussian2dFamily(seed=9)
    late = family.sample_episode('train', 2, 3, 3, index=17)
    for index in range(5):
        family.sample_episode('train', 2, 3, 3, index)
    again = family.sample_episode('train', 2, 3, 3, index=17)
    assert np.array_equal(late.support_x.data, again.support_x.data)
    assert np.array_equal(late.query_y, again.query_y)
    other = family.sample_episode('val', 2, 3, 3, index=17)
    assert not np.array_equal(late.support_x.data, other.support_x.data)


def test_gaussian2d_labels_are_swapped_on_odd_tasks():
    geometry = Gaussian2dGeometry()
    for even in (0, 2):
        first, second = geometry.clusters(even), geometry.clusters(even + 1)
        assert np.array_equal(first[0][0], second[1][0])
        assert np.array_equal(first[1][0], second[0][0])
    assert np.allclose(geometry.clusters(0)[0][1], np.diag([1.0, 0.1]))
    assert np.allclose(geometry.clusters(2)[0][1], np.diag([0.1, 1.0]))
    with pytest.raises(ValueError):
        geometry.clusters(N_TASKS)


def test_gaussian2d_offset_moves_every_cluster():
    shifted = Gaussian2dGeometry(offset=(3.0, 3.0))
    for task_id in range(N_TASKS):
        for (plain, _), (moved, _) in zip(Gaussian2dGeometry().clusters(task_id), shifted.clusters(task_id)):
            assert np.allclose(moved - plain, [3.0, 3.0])


def test_gaussian2d_is_two_way():
    with pytest.raises(ConfigError):
        next(Gaussian2dFamily().episodes('train', 1, 3, 1, 1))


@pytest.mark.parametrize('task_id', range(N_TASKS))
def test_bayes_classifier_is_nearly_perfect(task_id):
    assert bayes_accuracy(Gaussian2dGeometry(), task_id, 2000, np.random.default_rng(task_id)) > 0.97


def test_glyph_samples_are_deterministic():
    cfg = GlyphConfig(image_size=20)
    first = glyph_sample(11, 3, cfg)
    assert first.shape == (1, 20, 20)
    assert first.dtype == np.float32
    assert np.array_equal(first, glyph_sample(11, 3, cfg))
    assert not np.array_equal(first, glyph_sample(11, 4, cfg))
    assert 0.0 <= first.min() and first.max() <= 1.0


def test_glyph_classes_differ():
    family = GlyphFamily(GlyphConfig(n_classes=4, image_size=16), seed=0)
    a, b = family.prototype(family.classes[0]), family.prototype(family.classes[1])
    assert a.any() and b.any()
    assert not np.array_equal(a, b)


def test_glyph_family_rejects_unknown_class():
    family = GlyphFamily(GlyphConfig(n_classes=4, image_size=16), seed=0)
    with pytest.raises(DatasetError):
        family.draw_class('glyphs:9999', 1, np.random.default_rng(0))


def test_glyph_config_validation():
    with pytest.raises(ConfigError):
        GlyphConfig(n_classes=1)
    with pytest.raises(ConfigError):
        GlyphConfig(strokes=(3, 2))


def write_folder(root, classes, per_class, size=12):
    rng = np.random.default_rng(0)
    for name in classes:
        class_dir = root.joinpath(name)
        class_dir.mkdir()
        for i in range(per_class):
            cv2.imwrite(str(class_dir.joinpath(f"{i}.png")), rng.integers(0, 256, size=(size, size), dtype=np.uint8))


def test_image_folder_family(tmp_path):
    write_folder(tmp_path, ['alpha', 'beta', 'gamma'], 4)
    tmp_path.joinpath('beta', 'broken.png').write_bytes(b'not an image')
    family = load_image_folder(tmp_path, image_size=8, channels=1, min_per_class=2, name='folder')
    assert family.input_shape == (1, 8, 8)
    assert family.classes == ['folder:alpha', 'folder:beta', 'folder:gamma']
    assert family.images['folder:beta'].shape == (4, 1, 8, 8)
    episode = family.sample_episode('train', 3, 1, 2, index=0).validate()
    assert episode.support_x.data.max() <= 1.0


def test_image_folder_reads_color(tmp_path):
    write_folder(tmp_path, ['a', 'b'], 2)
    family = load_image_folder(tmp_path, image_size=6, channels=3)
    assert family.input_shape == (3, 6, 6)
    assert family.images[family.classes[0]].shape == (2, 3, 6, 6)


def test_image_folder_excludes_small_classes(tmp_path):
    write_folder(tmp_path, ['a', 'b'], 3)
    write_folder(tmp_path, ['tiny'], 1)
    family = load_image_folder(tmp_path, image_size=8, min_per_class=2, name='f')
    assert family.classes == ['f:a', 'f:b']


def test_image_folder_errors(tmp_path):
    with pytest.raises(DatasetError):
        load_image_folder(tmp_path.joinpath('missing'))
    with pytest.raises(DatasetError):
        load_image_folder(tmp_path)
    write_folder(tmp_path, ['a'], 1)
    with pytest.raises(DatasetError):
        load_image_folder(tmp_path, channels=2)


def test_run_config_drops_classes_too_small_for_an_episode(tmp_path):
    write_folder(tmp_path, [f'c{i}' for i in range(6)], 6)
    write_folder(tmp_path, ['tiny'], 2)
    cfg = RunConfig.load(overrides={'tasks.family': 'image-folder', 'tasks.path': str(tmp_path),
                                    'tasks.image_size': 16, 'tasks.n_way': 2, 'tasks.k_shot': 1,
                                    'tasks.q_per_class': 3, 'encoder.variant': 'conv4'})
    family = cfg.make_family()
    pooled = [ref for pool in family.pools.values() for ref in pool]
    assert sorted(pooled) == sorted(family.classes)
    assert not any(ref.endswith(':tiny') for ref in pooled)
    assert len(pooled) == 6
    check_episodes(family, 'train', 5, 2, 1, 3)
