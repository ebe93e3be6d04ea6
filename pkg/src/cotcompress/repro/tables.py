"""Reference result tables, transcribed value-for-value.

Rows are stored exactly as printed. A sha256 over the canonical JSON of every
table is pinned in ``TABLE_CHECKSUMS``; editing a value without updating the
checksum makes :func:`load_embedded_table` fail.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

# (compressor, rounds, original_acc_percent, compressor_acc, original_len,
#  compression_rate, ppl, compressed_len, finetuned_acc)
COMPRESSION_COLUMNS = (
    "compressor",
    "rounds",
    "original_acc",
    "compressor_acc",
    "original_len",
    "compression_rate",
    "ppl",
    "compressed_len",
    "finetuned_acc",
)

TABLE5_LLAMA = (
    ("GPT-3.5-turbo", 2, 86.1, 0.840, 147.46, 0.325, 5.762, 59.92, 0.509),
    ("GPT-3.5-turbo", 3, 86.1, 0.840, 147.46, 0.310, 6.133, 55.53, 0.491),
    ("GPT-3.5-turbo", 4, 86.1, 0.840, 147.46, 0.300, 6.343, 53.85, 0.478),
    ("GPT-3.5-turbo", 5, 86.1, 0.840, 147.46, 0.292, 6.471, 52.22, 0.466),
    ("GPT-4.1-mini", 2, 86.1, 0.949, 190.29, 0.278, 5.696, 54.99, 0.713),
    ("GPT-4.1-mini", 3, 86.1, 0.949, 190.29, 0.262, 6.029, 48.43, 0.676),
    ("GPT-4.1-mini", 4, 86.1, 0.949, 190.29, 0.252, 6.183, 46.61, 0.649),
    ("GPT-4.1-mini", 5, 86.1, 0.949, 190.29, 0.246, 6.255, 45.77, 0.643),
    ("GPT-4.1-nano", 2, 86.1, 0.905, 252.29, 0.301, 5.141, 61.57, 0.776),
    ("GPT-4.1-nano", 3, 86.1, 0.905, 252.29, 0.291, 5.377, 58.17, 0.766),
    ("GPT-4.1-nano", 4, 86.1, 0.905, 252.29, 0.285, 5.490, 56.88, 0.738),
    ("GPT-4.1-nano", 5, 86.1, 0.905, 252.29, 0.281, 5.552, 55.60, 0.738),
    ("GPT-4o", 2, 86.1, 0.953, 273.57, 0.420, 4.793, 84.17, 0.788),
    ("GPT-4o", 3, 86.1, 0.953, 273.57, 0.402, 5.107, 79.16, 0.768),
    ("GPT-4o", 4, 86.1, 0.953, 273.57, 0.390, 5.287, 77.08, 0.766),
    ("GPT-4o", 5, 86.1, 0.953, 273.57, 0.382, 5.389, 76.34, 0.761),
    ("GPT-4o-mini", 2, 86.1, 0.922, 330.37, 0.497, 4.227, 99.57, 0.809),
    ("GPT-4o-mini", 3, 86.1, 0.922, 330.37, 0.482, 4.419, 93.48, 0.802),
    ("GPT-4o-mini", 4, 86.1, 0.922, 330.37, 0.472, 4.517, 90.57, 0.805),
    ("GPT-4o-mini", 5, 86.1, 0.922, 330.37, 0.464, 4.584, 88.58, 0.812),
)

TABLE6_QWEN3B = (
    ("GPT-3.5-turbo", 2, 83.7, 0.840, 147.46, 0.325, 5.762, 164.75, 0.753),
    ("GPT-3.5-turbo", 3, 83.7, 0.840, 147.46, 0.310, 6.133, 144.35, 0.704),
    ("GPT-3.5-turbo", 4, 83.7, 0.840, 147.46, 0.300, 6.343, 102.87, 0.584),
    ("GPT-3.5-turbo", 5, 83.7, 0.840, 147.46, 0.292, 6.471, 102.17, 0.580),
    ("GPT-4.1-mini", 2, 83.7, 0.949, 190.29, 0.278, 5.696, 202.04, 0.799),
    ("GPT-4.1-mini", 3, 83.7, 0.949, 190.29, 0.262, 6.029, 199.71, 0.804),
    ("GPT-4.1-mini", 4, 83.7, 0.949, 190.29, 0.252, 6.183, 202.05, 0.811),
    ("GPT-4.1-mini", 5, 83.7, 0.949, 190.29, 0.246, 6.255, 200.17, 0.804),
    ("GPT-4.1-nano", 2, 83.7, 0.905, 252.29, 0.301, 5.141, 203.00, 0.825),
    ("GPT-4.1-nano", 3, 83.7, 0.905, 252.29, 0.291, 5.377, 201.23, 0.826),
    ("GPT-4.1-nano", 4, 83.7, 0.905, 252.29, 0.285, 5.490, 202.89, 0.824),
    ("GPT-4.1-nano", 5, 83.7, 0.905, 252.29, 0.281, 5.552, 202.15, 0.825),
    ("GPT-4o", 2, 83.7, 0.953, 273.57, 0.420, 4.793, 210.98, 0.804),
    ("GPT-4o", 3, 83.7, 0.953, 273.57, 0.402, 5.107, 208.16, 0.807),
    ("GPT-4o", 4, 83.7, 0.953, 273.57, 0.390, 5.287, 207.44, 0.804),
    ("GPT-4o", 5, 83.7, 0.953, 273.57, 0.382, 5.389, 206.06, 0.792),
    ("GPT-4o-mini", 2, 83.7, 0.922, 330.37, 0.497, 4.227, 217.85, 0.818),
    ("GPT-4o-mini", 3, 83.7, 0.922, 330.37, 0.482, 4.419, 214.69, 0.817),
    ("GPT-4o-mini", 4, 83.7, 0.922, 330.37, 0.472, 4.517, 214.21, 0.810),
    ("GPT-4o-mini", 5, 83.7, 0.922, 330.37, 0.464, 4.584, 216.25, 0.805),
)

TABLE7_QWEN7B = (
    ("GPT-3.5-turbo", 2, 91.4, 0.840, 147.46, 0.325, 5.762, 80.68, 0.624),
    ("GPT-3.5-turbo", 3, 91.4, 0.840, 147.46, 0.310, 6.133, 66.28, 0.557),
    ("GPT-3.5-turbo", 4, 91.4, 0.840, 147.46, 0.300, 6.343, 50.64, 0.440),
    ("GPT-3.5-turbo", 5, 91.4, 0.840, 147.46, 0.292, 6.471, 60.97, 0.525),
    ("GPT-4.1-mini", 2, 91.4, 0.949, 190.29, 0.278, 5.696, 71.76, 0.791),
    ("GPT-4.1-mini", 3, 91.4, 0.949, 190.29, 0.262, 6.029, 61.87, 0.753),
    ("GPT-4.1-mini", 4, 91.4, 0.949, 190.29, 0.252, 6.183, 59.74, 0.735),
    ("GPT-4.1-mini", 5, 91.4, 0.949, 190.29, 0.246, 6.255, 58.86, 0.732),
    ("GPT-4.1-nano", 2, 91.4, 0.905, 252.29, 0.301, 5.141, 71.77, 0.826),
    ("GPT-4.1-nano", 3, 91.4, 0.905, 252.29, 0.291, 5.377, 70.35, 0.821),
    ("GPT-4.1-nano", 4, 91.4, 0.905, 252.29, 0.285, 5.490, 66.94, 0.806),
    ("GPT-4.1-nano", 5, 91.4, 0.905, 252.29, 0.281, 5.552, 65.50, 0.799),
    ("GPT-4o", 2, 91.4, 0.953, 273.57, 0.420, 4.793, 137.63, 0.860),
    ("GPT-4o", 3, 91.4, 0.953, 273.57, 0.402, 5.107, 129.21, 0.845),
    ("GPT-4o", 4, 91.4, 0.953, 273.57, 0.390, 5.287, 117.46, 0.847),
    ("GPT-4o", 5, 91.4, 0.953, 273.57, 0.382, 5.389, 121.62, 0.838),
    ("GPT-4o-mini", 2, 91.4, 0.922, 330.37, 0.497, 4.227, 180.00, 0.878),
    ("GPT-4o-mini", 3, 91.4, 0.922, 330.37, 0.482, 4.419, 169.46, 0.873),
    ("GPT-4o-mini", 4, 91.4, 0.922, 330.37, 0.472, 4.517, 129.99, 0.707),
    ("GPT-4o-mini", 5, 91.4, 0.922, 330.37, 0.464, 4.584, 148.76, 0.863),
)
# (method, model, dataset, acc, tokens, latency_s, te)
TABLE1_COLUMNS = ("method", "model", "dataset", "acc", "tokens", "latency_s", "te")
TABLE1_ROWS = (
    ("Original", "LLaMA-3.1-8B", "GSM8K", 86.2, 213.17, 1.33, 40.44),
    ("Original", "LLaMA-3.1-8B", "MATH-500", 48.6, 502.60, 6.83, 9.67),
    ("Original", "Qwen2.5-7B", "GSM8K", 91.4, 297.83, 1.96, 30.69),
    ("Original", "Qwen2.5-7B", "MATH-500", 71.4, 574.85, 6.65, 12.42),
    ("Original", "Qwen2.5-3B", "GSM8K", 83.7, 314.87, 1.99, 26.58),
    ("Original", "Qwen2.5-3B", "MATH-500", 61.6, 578.51, 5.90, 10.65),
    ("Prompt", "LLaMA-3.1-8B", "GSM8K", 76.9, 136.48, 1.08, 56.35),
    ("Prompt", "LLaMA-3.1-8B", "MATH-500", 37.6, 335.92, 3.78, 11.19),
    ("Prompt", "Qwen2.5-7B", "GSM8K", 82.7, 175.83, 1.12, 47.03),
    ("Prompt", "Qwen2.5-7B", "MATH-500", 49.1, 355.47, 3.45, 13.81),
    ("Prompt", "Qwen2.5-3B", "GSM8K", 71.3, 185.22, 1.28, 38.49),
    ("Prompt", "Qwen2.5-3B", "MATH-500", 42.0, 423.88, 3.98, 9.91),
    ("TokenSkip", "LLaMA-3.1-8B", "GSM8K", 78.2, 113.05, 0.86, 69.17),
    ("TokenSkip", "LLaMA-3.1-8B", "MATH-500", 40.2, 292.17, 3.53, 13.76),
    ("TokenSkip", "Qwen2.5-7B", "GSM8K", 86.0, 151.44, 0.89, 56.79),
    ("TokenSkip", "Qwen2.5-7B", "MATH-500", 52.8, 330.8, 3.12, 15.96),
    ("TokenSkip", "Qwen2.5-3B", "GSM8K", 74.4, 170.55, 1.02, 43.62),
    ("TokenSkip", "Qwen2.5-3B", "MATH-500", 44.2, 396.29, 3.74, 11.15),
    ("TALE", "LLaMA-3.1-8B", "GSM8K", 78.5, 139.63, 0.88, 56.22),
    ("MultiRound", "LLaMA-3.1-8B", "GSM8K", 81.1, 88.57, 0.75, 91.57),
    ("MultiRound", "LLaMA-3.1-8B", "MATH-500", 44.0, 198.04, 2.05, 22.22),
    ("MultiRound", "Qwen2.5-7B", "GSM8K", 86.2, 148.76, 0.87, 57.94),
    ("MultiRound", "Qwen2.5-7B", "MATH-500", 58.4, 254.89, 2.02, 22.91),
    ("MultiRound", "Qwen2.5-3B", "GSM8K", 80.5, 216.25, 1.33, 37.22),
    ("MultiRound", "Qwen2.5-3B", "MATH-500", 54.0, 265.80, 2.20, 20.32),
)

# (method, model, dataset, acc, tokens, te)
TABLE2_COLUMNS = ("method", "model", "dataset", "acc", "tokens", "te")
TABLE2_ROWS = (
    ("Original", "R1-Qwen-1.5B", "GSM8K", 79.0, 978, 8.08),
    ("Original", "R1-Qwen-1.5B", "MATH-500", 80.6, 4887, 1.65),
    ("Original", "R1-Qwen-1.5B", "AIME24", 29.4, 12073, 0.24),
    ("Original", "R1-Qwen-7B", "GSM8K", 87.9, 682, 12.89),
    ("Original", "R1-Qwen-7B", "MATH-500", 90.2, 3674, 2.45),
    ("Original", "R1-Qwen-7B", "AIME24", 53.5, 10306, 0.52),
    ("O1-Pruner", "R1-Qwen-1.5B", "GSM8K", 74.8, 458, 16.33),
    ("O1-Pruner", "R1-Qwen-1.5B", "MATH-500", 82.2, 3212, 2.56),
    ("O1-Pruner", "R1-Qwen-1.5B", "AIME24", 28.9, 10361, 0.28),
    ("O1-Pruner", "R1-Qwen-7B", "GSM8K", 87.6, 428, 20.47),
    ("O1-Pruner", "R1-Qwen-7B", "MATH-500", 86.6, 2534, 3.42),
    ("O1-Pruner", "R1-Qwen-7B", "AIME24", 49.2, 9719, 0.51),
    ("TALE", "R1-Qwen-1.5B", "GSM8K", 70.1, 1170, 5.99),
    ("TALE", "R1-Qwen-1.5B", "MATH-500", 76.2, 3107, 2.45),
    ("TALE", "R1-Qwen-1.5B", "AIME24", 20.0, 8915, 0.22),
    ("TALE", "R1-Qwen-7B", "GSM8K", 91.0, 522, 17.43),
    ("TALE", "R1-Qwen-7B", "MATH-500", 91.6, 2530, 3.62),
    ("TALE", "R1-Qwen-7B", "AIME24", 33.3, 8602, 0.39),
    ("CoT-Valve", "R1-Qwen-1.5B", "GSM8K", 70.4, 805, 8.74),
    ("CoT-Valve", "R1-Qwen-1.5B", "MATH-500", 76.5, 2705, 2.82),
    ("CoT-Valve", "R1-Qwen-1.5B", "AIME24", 23.4, 5601, 0.42),
    ("CoT-Valve", "R1-Qwen-7B", "GSM8K", 90.8, 364, 24.94),
    ("CoT-Valve", "R1-Qwen-7B", "MATH-500", 89.4, 1975, 4.52),
    ("CoT-Valve", "R1-Qwen-7B", "AIME24", 43.3, 6315, 0.69),
    ("MultiRound", "R1-Qwen-1.5B", "GSM8K", 79.3, 471, 19.61),
    ("MultiRound", "R1-Qwen-1.5B", "MATH-500", 76.0, 1954, 3.73),
    ("MultiRound", "R1-Qwen-1.5B", "AIME24", 26.7, 7099, 0.38),
    ("MultiRound", "R1-Qwen-7B", "GSM8K", 90.1, 361, 27.37),
    ("MultiRound", "R1-Qwen-7B", "MATH-500", 86.8, 2039, 5.74),
    ("MultiRound", "R1-Qwen-7B", "AIME24", 50.0, 6144, 0.81),
)

# (model, feature, n, r, p_value)
CORR_COLUMNS = ("model", "feature", "n", "r", "p_value")
TABLE3_CORR = (
    ("LLaMA-3.1-8B", "CR", 20, 0.540, 1.3e-2),
    ("LLaMA-3.1-8B", "PPL", 20, -0.810, 1.3e-5),
    ("LLaMA-3.1-8B", "Len", 20, 0.650, 1.8e-3),
    ("Qwen2.5-3B", "CR", 20, 0.210, 3.9e-1),
    ("Qwen2.5-3B", "PPL", 20, -0.560, 1.1e-2),
    ("Qwen2.5-3B", "Len", 20, 0.980, 1.2e-14),
    ("Qwen2.5-7B", "CR", 20, 0.420, 6.5e-2),
    ("Qwen2.5-7B", "PPL", 20, -0.700, 6.5e-4),
    ("Qwen2.5-7B", "Len", 20, 0.630, 2.8e-3),
)
TABLE4_CORR = (
    ("LLaMA-3.1-8B", "CR", 20, 0.990, 5.5e-16),
    ("LLaMA-3.1-8B", "PPL", 20, -0.930, 1.9e-9),
    ("LLaMA-3.1-8B", "Len", 20, 1.000, 3.5e-20),
    ("Qwen2.5-3B", "CR", 20, 0.370, 1.1e-1),
    ("Qwen2.5-3B", "PPL", 20, -0.670, 1.3e-3),
    ("Qwen2.5-3B", "Len", 20, 1.000, 9.0e-21),
    ("Qwen2.5-7B", "CR", 20, 0.960, 5.0e-11),
    ("Qwen2.5-7B", "PPL", 20, -0.910, 3.6e-8),
    ("Qwen2.5-7B", "Len", 20, 0.990, 3.8e-17),
)

# (model, r2_acc, r2_len)
TABLE9_COLUMNS = ("model", "r2_acc", "r2_len")
TABLE9_R2 = (
    ("LLaMA3.1-8B", 0.81, 0.87),
    ("Qwen2.5-7B", 0.78, 0.91),
    ("Qwen2.5-3B", 0.73, 0.89),
)

_TABLES = {
    "table5_llama": (COMPRESSION_COLUMNS, TABLE5_LLAMA),
    "table6_qwen3b": (COMPRESSION_COLUMNS, TABLE6_QWEN3B),
    "table7_qwen7b": (COMPRESSION_COLUMNS, TABLE7_QWEN7B),
    "table1_rows": (TABLE1_COLUMNS, TABLE1_ROWS),
    "table2_rows": (TABLE2_COLUMNS, TABLE2_ROWS),
    "table3_corr": (CORR_COLUMNS, TABLE3_CORR),
    "table4_corr": (CORR_COLUMNS, TABLE4_CORR),
    "table9_r2": (TABLE9_COLUMNS, TABLE9_R2),
}
TABLE_NAMES = tuple(_TABLES)

# target model -> (compression table, name used in the correlation tables, name used in table 9)
MODELS = {
    "LLaMA-3.1-8B": ("table5_llama", "LLaMA-3.1-8B", "LLaMA3.1-8B"),
    "Qwen2.5-3B": ("table6_qwen3b", "Qwen2.5-3B", "Qwen2.5-3B"),
    "Qwen2.5-7B": ("table7_qwen7b", "Qwen2.5-7B", "Qwen2.5-7B"),
}

TABLE_CHECKSUMS: dict[str, str] = {
    "table5_llama": "2876cef71e95a91281d092dde17bd8c1dbde1ac80340c9b439e127f8813c27c1",
    "table6_qwen3b": "ddaa6c471e826550e0c529c61cbb524fa982aaeb7fa557cfe185ed3bd62a1799",
    "table7_qwen7b": "a7414a6fea6841ed61d212c6aa6142626b9bb54738de046d7bf152e203fea510",
    "table1_rows": "ae8ba4f5336ec44b0ae086c30453e9bc97a444dafe716402d3ac43000abe2b01",
    "table2_rows": "a1b1eb443a3afaf57f17e86d116e1e1ef20a1a91a567cd8d28c492898ba95480",
    "table3_corr": "ed30e011f95b86cab8ab5bda6ee47993dd7062bfb5dc7b93c2541cbfb16e5de0",
    "table4_corr": "783b070abed832302dff08ff14abcd74bba03d90d0dee5db21538b34697861f4",
    "table9_r2": "554c982ea90cbe4b36f293e7bc03b16fb39e8331f5e897cca50dcd40dadf505b",
}


@dataclass(frozen=True)
class ReferenceTable:
    name: str
    columns: tuple[str, ...]
    rows: tuple[dict, ...]

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def lookup(self, **match) -> dict:
        hits = [r for r in self.rows if all(r[k] == v for k, v in match.items())]
        if len(hits) != 1:
            raise KeyError(f"{self.name}: {len(hits)} rows match {match}")
        return hits[0]


def table_checksum(name: str) -> str:
    columns, rows = _TABLES[name]
    blob = json.dumps({"columns": columns, "rows": rows}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_embedded_table(name: str) -> ReferenceTable:
    if name not in _TABLES:
        raise KeyError(f"unknown table {name!r}; known: {', '.join(TABLE_NAMES)}")
    expected = TABLE_CHECKSUMS.get(name)
    if expected is not None and table_checksum(name) != expected:
        raise RuntimeError(f"embedded table {name} does not match its pinned checksum")
    columns, rows = _TABLES[name]
    return ReferenceTable(name, columns, tuple(dict(zip(columns, r)) for r in rows))
