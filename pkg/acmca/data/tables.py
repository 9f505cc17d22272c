"""
원본 테이블 파싱/저장 - 임상 CSV, 유전형 TSV, 영상 특징 벡터 CSV
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import SchemaError
from .batch import CLASS_INDEX, CLASS_NAMES

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CLINICAL_FEATURES = ("gender", "age", "moca", "mmse", "cdr", "faq", "gds")
CLINICAL_COLUMNS = ("subject_id",) + CLINICAL_FEATURES + ("label",)
GENDER_CODES = {"M": 0.0, "F": 1.0}

# GT 문자열 → 대립유전자 수 (-1 = 결측)
GENOTYPE_CODES = {
    "0/0": 0, "0|0": 0,
    "0/1": 1, "1/0": 1, "0|1": 1, "1|0": 1,
    "1/1": 2, "1|1": 2,
    "./.": -1, ".|.": -1, ".": -1,
}
MISSING_CALL = "./."


# =============================================================================
# 테이블 타입
# =============================================================================

@dataclass
class ClinicalTable:
    """
    피험자별 최신 임상 기록. values 열 순서는 CLINICAL_FEATURES이며
    gender는 {M: 0, F: 1}로 접혀 있다.
    """
    subject_ids: List[str]
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(len(self.subject_ids), len(CLINICAL_FEATURES))
        self.labels = np.asarray(self.labels, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.subject_ids)

    def index(self) -> Dict[str, int]:
        return {sid: i for i, sid in enumerate(self.subject_ids)}

    def rows(self, ids: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
        idx = self.index()
        sel = [idx[s] for s in ids]
        return self.values[sel], self.labels[sel]


@dataclass(frozen=True)
class SiteInfo:
    site_id: str
    ref: str
    alt: str


@dataclass
class GenotypeTable:
    """
    피험자 × SNP 사이트. calls는 대립유전자 수 {0,1,2} (결측 -1),
    gq는 호출별 genotype quality (기록이 없으면 -1)
    """
    subject_ids: List[str]
    sites: List[SiteInfo]
    calls: np.ndarray
    gq: np.ndarray

    def __post_init__(self):
        shape = (len(self.subject_ids), len(self.sites))
        self.calls = np.asarray(self.calls, dtype=np.int64).reshape(shape)
        self.gq = np.asarray(self.gq, dtype=np.int64).reshape(shape)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def __len__(self) -> int:
        return len(self.subject_ids)

    def select_sites(self, keep: Sequence[int]) -> "GenotypeTable":
        keep = np.asarray(keep, dtype=np.int64)
        return GenotypeTable(
            subject_ids=list(self.subject_ids),
            sites=[self.sites[i] for i in keep],
            calls=self.calls[:, keep],
            gq=self.gq[:, keep],
        )


@dataclass
class FeatureVectorTable:
    """피험자 × 고정 폭 특징 벡터 (MRI/PET 사전 추출 특징, 인코딩된 유전형)"""
    modality: str
    subject_ids: List[str]
    values: np.ndarray
    columns: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(len(self.subject_ids), -1)
        if not self.columns:
            self.columns = [f"f{i}" for i in range(self.values.shape[1])]

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    def __len__(self) -> int:
        return len(self.subject_ids)

    def rows(self, ids: Sequence[str]) -> np.ndarray:
        idx = {sid: i for i, sid in enumerate(self.subject_ids)}
        return self.values[[idx[s] for s in ids]]


# =============================================================================
# 파서
# =============================================================================

def _read_frame(path: PathLike, kind: str, **kwargs) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{kind} file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, **kwargs)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{kind} file {path} is empty") from None
    except pd.errors.ParserError as e:
        raise SchemaError(f"{kind} file {path} could not be parsed: {e}") from e
    frame.columns = [str(c).strip() for c in frame.columns]
    if frame.empty:
        raise SchemaError(f"{kind} file {path} has a header but no rows")
    return frame


def _dedupe_last(frame: pd.DataFrame, kind: str) -> pd.DataFrame:
    """같은 subject_id가 여러 번 나오면 마지막 행만 유지 (최신 기록)"""
    dupes = frame["subject_id"][frame["subject_id"].duplicated(keep="last")]
    if len(dupes):
        logger.warning(f"⚠️ {kind}: duplicate subject ids {sorted(set(dupes))[:10]}, keeping last occurrence")
    return frame.drop_duplicates(subset="subject_id", keep="last")


def parse_clinical(path: PathLike, strict: bool = False) -> ClinicalTable:
    """
    임상 CSV 파싱

    Args:
        path: `subject_id,gender,age,moca,mmse,cdr,faq,gds,label` 헤더를 가진 CSV
        strict: True면 잘못된 행이 하나라도 있을 때 SchemaError, False면 해당 행을 경고와 함께 제외

    Returns:
        ClinicalTable: 피험자당 한 행 (중복 id는 마지막 행 유지)
    """
    frame = _read_frame(path, "clinical")
    frame.columns = [c.lower() for c in frame.columns]
    missing = [c for c in CLINICAL_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(
            f"clinical file {path} is missing required column(s): {', '.join(c.upper() for c in missing)}"
        )

    frame = frame.assign(_row=np.arange(len(frame)) + 2)  # 파일 줄 번호 (헤더 = 1)
    frame["subject_id"] = frame["subject_id"].str.strip()
    gender = frame["gender"].str.strip().str.upper().map(GENDER_CODES)
    numeric = frame[list(CLINICAL_FEATURES[1:])].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    label = frame["label"].str.strip().str.upper().map(CLASS_INDEX)

    problems: List[str] = []
    bad = np.zeros(len(frame), dtype=bool)
    checks = [("subject_id", frame["subject_id"] == ""), ("gender", gender.isna()), ("label", label.isna())]
    checks += [(c, ~np.isfinite(numeric[c].to_numpy(dtype=np.float64))) for c in CLINICAL_FEATURES[1:]]
    for column, mask in checks:
        mask = np.asarray(mask, dtype=bool)
        for row in frame["_row"].to_numpy()[mask][:5]:
            problems.append(f"row {row}: invalid {column.upper()}")
        bad |= mask

    if bad.any():
        message = f"clinical file {path}: {int(bad.sum())} invalid row(s): " + "; ".join(problems[:10])
        if strict or bad.all():
            raise SchemaError(message)
        logger.warning(f"⚠️ {message} (rows skipped)")

    frame = frame.loc[~bad].assign(
        gender=gender[~bad], label=label[~bad], **{c: numeric[c][~bad] for c in CLINICAL_FEATURES[1:]}
    )
    frame = _dedupe_last(frame, "clinical")
    logger.info(f"📄 clinical: {len(frame)} subjects from {path}")
    return ClinicalTable(
        subject_ids=frame["subject_id"].tolist(),
        values=frame[list(CLINICAL_FEATURES)].to_numpy(dtype=np.float64),
        labels=frame["label"].to_numpy(dtype=np.int64),
    )


def _parse_site_header(line: str, path: PathLike) -> List[SiteInfo]:
    fields = line.rstrip("\n").split("\t")
    if not fields or fields[0].strip() != "#site":
        raise SchemaError(f"genotype file {path}: first line must be the '#site' metadata line")
    sites = []
    for entry in fields[1:]:
        entry = entry.strip()
        if not entry:
            continue
        try:
            site_id, alleles = entry.split("=", 1)
            ref, alt = alleles.split("/", 1)
        except ValueError:
            raise SchemaError(f"genotype file {path}: malformed site metadata '{entry}' (expected id=REF/ALT)") from None
        sites.append(SiteInfo(site_id.strip(), ref.strip(), alt.strip()))
    return sites


def parse_genotypes(path: PathLike) -> GenotypeTable:
    """
    유전형 TSV 파싱. 1행 `#site<TAB>rs1=A/G<TAB>...`, 2행 헤더 `subject_id<TAB>rs1...`,
    이후 각 칸은 `GT:GQ` (예: `0/1:35`, 결측은 `./.`)
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"genotype file not found: {path}")
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    if not first.strip():
        raise SchemaError(f"genotype file {path} is empty")
    sites = _parse_site_header(first, path)

    frame = _read_frame(path, "genotype", sep="\t", skiprows=1)
    if frame.columns[0] != "subject_id":
        raise SchemaError(f"genotype file {path}: first column must be 'subject_id', got '{frame.columns[0]}'")
    site_columns = list(frame.columns[1:])
    if site_columns != [s.site_id for s in sites]:
        raise SchemaError(f"genotype file {path}: header columns do not match the '#site' metadata line")

    frame["subject_id"] = frame["subject_id"].str.strip()
    calls = np.full((len(frame), len(sites)), -1, dtype=np.int64)
    gq = np.full((len(frame), len(sites)), -1, dtype=np.int64)
    for j, column in enumerate(site_columns):
        parts = frame[column].str.strip().str.split(":", n=1, expand=True)
        gt = parts[0].map(GENOTYPE_CODES)
        if gt.isna().any():
            row = int(np.flatnonzero(gt.isna().to_numpy())[0])
            raise SchemaError(
                f"genotype file {path}: row {row + 3}, column {column}: unknown genotype '{frame[column].iloc[row]}'"
            )
        calls[:, j] = gt.to_numpy(dtype=np.int64)
        if parts.shape[1] > 1:
            quality = pd.to_numeric(parts[1], errors="coerce")
            bad = quality.isna() & parts[1].notna() & (parts[1] != "")
            if bad.any():
                row = int(np.flatnonzero(bad.to_numpy())[0])
                raise SchemaError(f"genotype file {path}: row {row + 3}, column {column}: GQ must be an integer")
            gq[:, j] = quality.fillna(-1).to_numpy().astype(np.int64)

    table = GenotypeTable(frame["subject_id"].tolist(), sites, calls, gq)
    if len(set(table.subject_ids)) != len(table.subject_ids):
        keep = pd.Series(table.subject_ids).drop_duplicates(keep="last").index.to_numpy()
        logger.warning(f"⚠️ genotype: duplicate subject ids in {path}, keeping last occurrence")
        table = GenotypeTable([table.subject_ids[i] for i in keep], sites, calls[keep], gq[keep])
    logger.info(f"🧬 genotype: {len(table)} subjects x {table.n_sites} sites from {path}")
    return table


def parse_feature_vectors(path: PathLike, modality: str) -> FeatureVectorTable:
    """`subject_id,f0,f1,...` CSV. 모든 행의 폭이 같고 값은 유한해야 한다"""
    frame = _read_frame(path, f"{modality} feature")
    if frame.columns[0] != "subject_id":
        raise SchemaError(f"{modality} feature file {path}: first column must be 'subject_id'")
    columns = list(frame.columns[1:])
    if not columns:
        raise SchemaError(f"{modality} feature file {path} has no feature columns")
    frame["subject_id"] = frame["subject_id"].str.strip()
    values = frame[columns].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce")).to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise SchemaError(
            f"{modality} feature file {path}: row {r + 2}, column {columns[c]}: value "
            f"'{frame[columns[c]].iloc[r]}' is not a finite number"
        )
    frame = _dedupe_last(frame.assign(_pos=np.arange(len(frame))), modality)
    kept = frame["_pos"].to_numpy()
    logger.info(f"🖼️ {modality}: {len(kept)} subjects x {len(columns)} features from {path}")
    return FeatureVectorTable(modality, frame["subject_id"].tolist(), values[kept], columns)


# =============================================================================
# 저장 (선언된 파일 형식 그대로)
# =============================================================================

def write_clinical(table: ClinicalTable, path: PathLike) -> Path:
    path = Path(path)
    inverse_gender = {v: k for k, v in GENDER_CODES.items()}
    frame = pd.DataFrame(table.values, columns=CLINICAL_FEATURES)
    frame["gender"] = frame["gender"].map(inverse_gender)
    frame.insert(0, "subject_id", table.subject_ids)
    frame["label"] = [CLASS_NAMES[i] for i in table.labels]
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    return path


def write_genotypes(table: GenotypeTable, path: PathLike) -> Path:
    path = Path(path)
    inverse = {0: "0/0", 1: "0/1", 2: "1/1"}
    cells = {}
    for j, site in enumerate(table.sites):
        cells[site.site_id] = [
            MISSING_CALL if call < 0 else (inverse[call] if q < 0 else f"{inverse[call]}:{q}")
            for call, q in zip(table.calls[:, j], table.gq[:, j])
        ]
    frame = pd.DataFrame(cells)
    frame.insert(0, "subject_id", table.subject_ids)
    header = "\t".join(["#site"] + [f"{s.site_id}={s.ref}/{s.alt}" for s in table.sites])
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(header + "\n")
        frame.to_csv(f, sep="\t", index=False, lineterminator="\n")
    return path


def write_feature_vectors(table: FeatureVectorTable, path: PathLike) -> Path:
    path = Path(path)
    frame = pd.DataFrame(table.values, columns=table.columns)
    frame.insert(0, "subject_id", table.subject_ids)
    frame.to_csv(path, index=False, float_format="%.8f", lineterminator="\n")
    return path


def write_tables(
    clinical: ClinicalTable,
    genotypes: GenotypeTable,
    mri: FeatureVectorTable,
    pet: FeatureVectorTable,
    directory: PathLike,
) -> Dict[str, Path]:
    """네 원본 테이블을 실제 데이터와 같은 형식으로 기록"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return {
        "clinical": write_clinical(clinical, directory / "clinical.csv"),
        "genotype": write_genotypes(genotypes, directory / "genotypes.tsv"),
        "mri": write_feature_vectors(mri, directory / "mri_features.csv"),
        "pet": write_feature_vectors(pet, directory / "pet_features.csv"),
    }
