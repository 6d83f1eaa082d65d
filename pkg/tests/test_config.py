import os
import tempfile
import unittest
from pathlib import Path

from lib.config import RunConfig, build_config, check_writable, load_config
from lib.starframe.errors import ConfigurationError
from lib.starframe.models import Frame


class LoadConfigTests(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def _write(self, text: str) -> Path:
        path = self.tmp / "run.conf"
        path.write_text(text, encoding="utf-8")
        return path

    def test_defaults_without_file(self):
        cfg = load_config(None)
        self.assertEqual(cfg, RunConfig())
        self.assertEqual(cfg.to_params().n_grid, 601)

    def test_file_values_and_lists(self):
        path = self._write(
            "# comment\n"
            "omega0 = 1.5\n"
            "orders = 0, 2,4\n"
            "frames = lab,biframe\n"
            "rhos = 0.3,0.6\n"
            "emit_svg = yes\n"
        )
        cfg = load_config(path)
        self.assertEqual(cfg.omega0, 1.5)
        self.assertEqual(cfg.orders, [0, 2, 4])
        self.assertEqual(cfg.frames, [Frame.LAB, Frame.BIFRAME])
        self.assertEqual(cfg.rhos, [0.3, 0.6])
        self.assertTrue(cfg.emit_svg)
        self.assertEqual(cfg.to_params().orders, (0, 2, 4))

    def test_overrides_win(self):
        path = self._write("n_grid = 301\nseed = 4\n")
        cfg = load_config(path, {"n_grid": 101, "seed": None})
        self.assertEqual(cfg.n_grid, 101)
        self.assertEqual(cfg.seed, 4)

    def test_unknown_key_is_named(self):
        path = self._write("omega_zero = 2.0\n")
        with self.assertRaises(ConfigurationError) as ctx:
            load_config(path)
        self.assertIn("omega_zero", str(ctx.exception))
        self.assertEqual(ctx.exception.meta["keys"], ["omega_zero"])

    def test_invalid_values(self):
        for values in (
            {"n_grid": "1"},
            {"rhos": "0.5,1.2"},
            {"orders": "0,-2"},
            {"beta": "-0.1"},
            {"frames": "lab,rotating"},
        ):
            with self.subTest(values=values):
                with self.assertRaises(ConfigurationError):
                    build_config(values)

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_config(self.tmp / "nope.conf")

    def test_bool_parsing_falls_back(self):
        self.assertFalse(build_config({"emit_svg": "off"}).emit_svg)
        self.assertFalse(build_config({"emit_svg": "maybe"}).emit_svg)
        self.assertTrue(build_config({"emit_svg": "1"}).emit_svg)


class CheckWritableTests(unittest.TestCase):
    def test_existing_directory(self):
        with tempfile.TemporaryDirectory() as d:
            check_writable(Path(d) / "out.csv")

    def test_missing_directory(self):
        with tempfile.TemporaryDirectory() as d:
            with self.assertRaises(ConfigurationError):
                check_writable(Path(d) / "missing" / "out.csv")

    @unittest.skipIf(hasattr(os, "geteuid") and os.geteuid() == 0, "root ignores permissions")
    def test_read_only_directory(self):
        with tempfile.TemporaryDirectory() as d:
            os.chmod(d, 0o500)
            try:
                with self.assertRaises(ConfigurationError):
                    check_writable(Path(d) / "out.csv")
            finally:
                os.chmod(d, 0o700)


if __name__ == "__main__":
    unittest.main()
