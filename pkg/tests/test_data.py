"""
Data Pipeline Tests
===================

SNP 품질 필터, 인코딩, 층화 분할, 정규화, 파서, 합성 코호트.
"""
import numpy as np
import pytest

from acmca.data import (
    ClinicalTable, GenotypeTable, ModalBatch, PreparedDataset, SiteInfo, SnpFilterThresholds, build_dataset,
    encode_alleles, filter_snps, hwe_test, intersect_cohort, normalize_clinical, parse_clinical,
    parse_feature_vectors, parse_genotypes, select_top_k_variance, snp_site_report, split_stratified,
    synth_cohort, write_tables,
)
from acmca.data.cohort import stratified_test_size
from acmca.data.tables import FeatureVectorTable
from acmca.errors import EmptyIntersectionError, SchemaError, StratificationError, UsageError


def genotype_table(*columns, gq=50):
    """열마다 대립유전자 수 리스트 (-1 = 결측)"""
    calls = np.column_stack(columns).astype(np.int64)
    quality = np.where(calls >= 0, gq, -1)
    ids = [f"S{i:03d}" for i in range(calls.shape[0])]
    sites = [SiteInfo(f"rs{j}", "A", "G") for j in range(calls.shape[1])]
    return GenotypeTable(ids, sites, calls, quality)


def hwe_column(n_aa=36, n_ab=48, n_bb=16):
    return [0] * n_aa + [1] * n_ab + [2] * n_bb


# =============================================================================
# SNP 필터
# =============================================================================

class TestSnpFilter:

    def test_hwe_equilibrium(self):
        """36/48/16 (p=0.6)은 정확히 평형: χ²=0, p=1"""
        chi2, p = hwe_test(36, 48, 16)
        assert chi2 == pytest.approx(0.0, abs=1e-12)
        assert p == pytest.approx(1.0)

    def test_hwe_excess_heterozygotes(self):
        """이형접합만 있으면 평형에서 크게 벗어난다"""
        chi2, p = hwe_test(0, 100, 0)
        assert chi2 == pytest.approx(100.0)
        assert p < 1e-6

    def test_hwe_monomorphic(self):
        assert hwe_test(100, 0, 0) == (0.0, 1.0)
        assert hwe_test(0, 0, 0) == (0.0, 1.0)

    def test_site_report_maf(self):
        report = snp_site_report(genotype_table(hwe_column()))
        assert report.loc[0, "maf"] == pytest.approx(0.4)
        assert report.loc[0, "missing_rate"] == 0.0
        assert bool(report.loc[0, "kept"])

    def test_missing_rate_above_threshold_dropped(self):
        """결측 6%는 기본 임계값 5%를 넘는다"""
        missing = hwe_column()
        for i in range(36, 42):
            missing[i] = -1
        g = genotype_table(hwe_column(), missing)
        report = snp_site_report(g)
        assert report.loc[1, "missing_rate"] == pytest.approx(0.06)
        assert report.loc[1, "reason"] == "missing"
        assert [s.site_id for s in filter_snps(g).sites] == ["rs0"]

    def test_rare_site_dropped(self):
        """MAF 0.005 < 0.01"""
        g = genotype_table(hwe_column(), [0] * 99 + [1])
        report = snp_site_report(g)
        assert report.loc[1, "maf"] == pytest.approx(0.005)
        assert report.loc[1, "reason"] == "maf"

    def test_low_gq_calls_masked(self):
        """GQ < min_gq 호출은 결측으로 세어진다"""
        g = genotype_table(hwe_column())
        g.gq[:10, 0] = 5
        report = snp_site_report(g, SnpFilterThresholds(min_gq=20))
        assert report.loc[0, "n_called"] == 90
        assert report.loc[0, "reason"] == "missing"

    def test_filter_is_idempotent(self):
        g = genotype_table(hwe_column(), [0] * 99 + [1], [1] * 100)
        once = filter_snps(g)
        twice = filter_snps(once)
        assert [s.site_id for s in once.sites] == [s.site_id for s in twice.sites]
        np.testing.assert_array_equal(once.calls, twice.calls)

    def test_missing_rate_exactly_at_threshold_kept(self):
        """결측 5/100 = 0.05 ≤ 0.05 → 유지"""
        g = genotype_table([0] * 34 + [1] * 46 + [2] * 15 + [-1] * 5)
        report = snp_site_report(g)
        assert report.loc[0, "missing_rate"] == 0.05
        assert report.loc[0, "reason"] == "pass"
        assert len(filter_snps(g).sites) == 1

    def test_gq_exactly_at_threshold_not_masked(self):
        g = genotype_table(hwe_column(), gq=20)
        report = snp_site_report(g, SnpFilterThresholds(min_gq=20))
        assert report.loc[0, "n_called"] == 100

    def test_hand_computed_site_decisions(self):
        """
        100명 × 10 사이트, 손으로 계산한 유지/제거 결정

        rs0  36/48/16           HWE 평형 χ²=0                         → pass
        rs1  30/40/30           χ²=4.0, p≈0.0455 < 0.05              → hwe
        rs2  29/42/29           χ²=2.56, p≈0.110                     → pass
        rs3  결측 5개            결측률 0.05 (경계)                     → pass
        rs4  결측 6개            결측률 0.06                           → missing
        rs5  98/2/0             MAF 2/200 = 0.01 (경계)               → pass
        rs6  99/1/0             MAF 0.005                            → maf
        rs7  0/2/98             alt 쪽이 다수, MAF 0.01 (경계)          → pass
        rs8  100/0/0            단형성 MAF 0                          → maf
        rs9  30/30/30 + 결측 10  결측률 0.10, χ²=10                    → missing;hwe
        """
        g = genotype_table(
            hwe_column(),
            hwe_column(30, 40, 30),
            hwe_column(29, 42, 29),
            [0] * 34 + [1] * 46 + [2] * 15 + [-1] * 5,
            [0] * 34 + [1] * 45 + [2] * 15 + [-1] * 6,
            [0] * 98 + [1] * 2,
            [0] * 99 + [1],
            [1] * 2 + [2] * 98,
            [0] * 100,
            hwe_column(30, 30, 30) + [-1] * 10,
        )
        report = snp_site_report(g)
        assert report["reason"].tolist() == [
            "pass", "hwe", "pass", "pass", "missing", "pass", "maf", "pass", "maf", "missing;hwe",
        ]
        assert report.loc[1, "hwe_chi2"] == pytest.approx(4.0)
        assert report.loc[1, "hwe_p"] == pytest.approx(0.0455, abs=1e-4)
        assert report.loc[2, "hwe_chi2"] == pytest.approx(2.56)
        assert report.loc[5, "maf"] == 0.01
        assert report.loc[7, "maf"] == 0.01
        assert report.loc[9, "hwe_chi2"] == pytest.approx(10.0)
        kept = [s.site_id for s in filter_snps(g).sites]
        assert kept == ["rs0", "rs2", "rs3", "rs5", "rs7"]

    def test_encode_imputes_mode(self):
        g = genotype_table([0, 2, 2, -1, 1])
        np.testing.assert_array_equal(encode_alleles(g)[:, 0], [0, 2, 2, 2, 1])

    def test_top_k_ties_keep_lower_index(self):
        matrix = np.array([[0, 1, 0, 2], [2, 1, 2, 0]], dtype=float)
        reduced, kept = select_top_k_variance(matrix, 2)
        assert kept == [0, 2]
        np.testing.assert_array_equal(reduced, matrix[:, [0, 2]])
        with pytest.raises(UsageError):
            select_top_k_variance(matrix, 5)


# =============================================================================
# 분할과 정규화
# =============================================================================

def labelled_batch(counts):
    labels = np.repeat(np.arange(len(counts)), counts)
    n = len(labels)
    return ModalBatch(
        subject_ids=[f"S{i:04d}" for i in range(n)],
        clinical=np.zeros((n, 7)),
        genetic=np.zeros((n, 3)),
        mri=np.zeros((n, 2)),
        pet=np.zeros((n, 2)),
        labels=labels,
    )


class TestSplit:

    @pytest.mark.parametrize("n, expected", [(165, 33), (39, 8), (35, 7), (30, 6), (6, 1), (2, 1)])
    def test_rounded_per_class_test_size(self, n, expected):
        assert stratified_test_size(n, 0.2) == expected

    def test_split_counts(self):
        """165/39/35 → test 33/8/7"""
        train, test = split_stratified(labelled_batch([165, 39, 35]), 0.2, seed=0)
        assert test.class_counts() == [33, 8, 7]
        assert train.class_counts() == [132, 31, 28]
        assert set(train.subject_ids).isdisjoint(test.subject_ids)

    def test_split_small_classes(self):
        _, test = split_stratified(labelled_batch([6, 6, 6]), 0.2, seed=1)
        assert test.class_counts() == [1, 1, 1]

    def test_split_is_seeded(self):
        batch = labelled_batch([20, 20, 20])
        assert split_stratified(batch, 0.2, 7)[1].subject_ids == split_stratified(batch, 0.2, 7)[1].subject_ids
        assert split_stratified(batch, 0.2, 7)[1].subject_ids != split_stratified(batch, 0.2, 8)[1].subject_ids

    def test_singleton_class_rejected(self):
        with pytest.raises(StratificationError):
            split_stratified(labelled_batch([5, 1, 5]), 0.2, seed=0)

    def test_bad_fraction(self):
        with pytest.raises(UsageError):
            split_stratified(labelled_batch([5, 5, 5]), 1.0, seed=0)

    def test_clinical_z_scores(self, rng):
        """수치 열은 평균 0/표준편차 1, gender는 그대로"""
        values = np.column_stack([rng.integers(0, 2, 50), rng.normal(70, 8, size=(50, 6))])
        normalized, stats = normalize_clinical(values)
        np.testing.assert_array_equal(normalized[:, 0], values[:, 0])
        np.testing.assert_allclose(normalized[:, 1:].mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(normalized[:, 1:].std(axis=0), 1.0, atol=1e-10)
        again, _ = normalize_clinical(values, stats)
        np.testing.assert_array_equal(again, normalized)

    def test_empty_intersection(self):
        clinical = ClinicalTable(["A"], np.zeros((1, 7)), [0])
        other = FeatureVectorTable("mri", ["B"], np.zeros((1, 2)))
        with pytest.raises(EmptyIntersectionError):
            intersect_cohort(clinical, other, other, other)

    def test_partial_overlap(self):
        """{A,B,C,D} ∩ {B,C,D,E} ∩ {D,F,B,C} ∩ {C,A,D,B} = {B,C,D}, id 정렬 순서"""
        def vectors(modality, ids):
            return FeatureVectorTable(modality, ids, [[ord(s) * 10.0 + k for k in range(2)] for s in ids])

        clinical = ClinicalTable(
            ["A", "B", "C", "D"], np.arange(28, dtype=float).reshape(4, 7), [0, 1, 2, 1],
        )
        batch = intersect_cohort(
            clinical,
            vectors("genetic", ["B", "C", "D", "E"]),
            vectors("mri", ["D", "F", "B", "C"]),
            vectors("pet", ["C", "A", "D", "B"]),
        )
        assert batch.subject_ids == ["B", "C", "D"]
        assert batch.labels.tolist() == [1, 2, 1]
        np.testing.assert_array_equal(batch.clinical, np.arange(7, 28, dtype=float).reshape(3, 7))
        expected = np.array([[660.0, 661.0], [670.0, 671.0], [680.0, 681.0]])
        for values in (batch.genetic, batch.mri, batch.pet):
            np.testing.assert_array_equal(values, expected)


# =============================================================================
# 파서
# =============================================================================

class TestParsers:

    def test_clinical_missing_column(self, tmp_path):
        path = tmp_path / "clinical.csv"
        path.write_text("subject_id,gender,age,moca,cdr,faq,gds,label\nS1,M,70,25,0.5,1,2,CN\n")
        with pytest.raises(SchemaError, match="MMSE"):
            parse_clinical(path)

    def test_clinical_invalid_row_skipped(self, tmp_path):
        path = tmp_path / "clinical.csv"
        path.write_text(
            "subject_id,gender,age,moca,mmse,cdr,faq,gds,label\n"
            "S1,M,70,25,28,0.5,1,2,CN\n"
            "S2,F,71,x,27,0.5,1,2,AD\n"
            "S3,F,68,20,24,1.0,6,3,MCI\n"
        )
        table = parse_clinical(path)
        assert table.subject_ids == ["S1", "S3"]
        assert table.labels.tolist() == [0, 1]
        assert table.values[1, 0] == 1.0
        with pytest.raises(SchemaError, match="row 3"):
            parse_clinical(path, strict=True)

    def test_clinical_duplicate_keeps_last(self, tmp_path):
        path = tmp_path / "clinical.csv"
        path.write_text(
            "subject_id,gender,age,moca,mmse,cdr,faq,gds,label\n"
            "S1,M,70,25,28,0.5,1,2,CN\n"
            "S1,M,72,22,26,0.5,3,2,MCI\n"
        )
        table = parse_clinical(path)
        assert table.subject_ids == ["S1"]
        assert table.labels.tolist() == [1]

    def test_genotypes(self, tmp_path):
        path = tmp_path / "genotypes.tsv"
        path.write_text(
            "#site\trs1=A/G\trs2=C/T\n"
            "subject_id\trs1\trs2\n"
            "S1\t0/1:35\t./.\n"
            "S2\t1|1:10\t0/0:99\n"
        )
        table = parse_genotypes(path)
        assert [s.alt for s in table.sites] == ["G", "T"]
        np.testing.assert_array_equal(table.calls, [[1, -1], [2, 0]])
        np.testing.assert_array_equal(table.gq, [[35, -1], [10, 99]])

    def test_genotypes_unknown_call(self, tmp_path):
        path = tmp_path / "genotypes.tsv"
        path.write_text("#site\trs1=A/G\nsubject_id\trs1\nS1\t2/2:30\n")
        with pytest.raises(SchemaError, match="rs1"):
            parse_genotypes(path)

    def test_feature_vectors_non_finite(self, tmp_path):
        path = tmp_path / "mri.csv"
        path.write_text("subject_id,f0,f1\nS1,0.1,0.2\nS2,0.3,nan\n")
        with pytest.raises(SchemaError, match="f1"):
            parse_feature_vectors(path, "mri")

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError):
            parse_feature_vectors(tmp_path / "absent.csv", "pet")

    def test_written_tables_parse_back(self, tmp_path):
        cohort = synth_cohort(seed=2, n_per_class=4, snp_count=6, img_width=3)
        paths = write_tables(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, tmp_path)
        genotypes = parse_genotypes(paths["genotype"])
        np.testing.assert_array_equal(genotypes.calls, cohort.genotypes.calls)
        mri = parse_feature_vectors(paths["mri"], "mri")
        np.testing.assert_allclose(mri.values, cohort.mri.values, atol=1e-7)
        clinical = parse_clinical(paths["clinical"])
        np.testing.assert_array_equal(clinical.labels, cohort.clinical.labels)


# =============================================================================
# 합성 코호트와 데이터셋
# =============================================================================

def nearest_centroid_accuracy(dataset):
    """임상+MRI+PET 원시 특징을 이어 붙인 최근접 중심 분류 정확도"""
    def features(batch):
        return np.hstack([batch.clinical, batch.mri, batch.pet])

    train, test = dataset.train, dataset.test
    centroids = np.stack([features(train)[train.labels == c].mean(axis=0) for c in range(3)])
    distances = ((features(test)[:, None, :] - centroids[None]) ** 2).sum(axis=-1)
    return float((distances.argmin(axis=1) == test.labels).mean())


class TestSynthetic:

    def test_same_seed_same_tables(self):
        a = synth_cohort(seed=11, n_per_class=5, snp_count=10, img_width=4)
        b = synth_cohort(seed=11, n_per_class=5, snp_count=10, img_width=4)
        np.testing.assert_array_equal(a.genotypes.calls, b.genotypes.calls)
        np.testing.assert_array_equal(a.mri.values, b.mri.values)
        np.testing.assert_array_equal(a.clinical.labels, b.clinical.labels)

    def test_class_balance(self):
        cohort = synth_cohort(seed=1, n_per_class=7, snp_count=5, img_width=3)
        assert np.bincount(cohort.clinical.labels).tolist() == [7, 7, 7]

    def test_dataset_counts(self, synthetic_dataset):
        """클래스당 20명 → test 4명씩"""
        assert synthetic_dataset.test.class_counts() == [4, 4, 4]
        assert len(synthetic_dataset.train) == 48
        assert synthetic_dataset.widths["C"] == 7

    def test_classes_separable_by_nearest_centroid(self, synthetic_dataset):
        """심어진 군집은 최근접 중심 분류로도 구분된다"""
        assert nearest_centroid_accuracy(synthetic_dataset) >= 0.75

    def test_default_cohort_is_learnable(self):
        """분리도 3.0, 클래스당 60명 → 최근접 중심 정확도 95% 초과"""
        cohort = synth_cohort(seed=7, snp_count=40)
        dataset, _ = build_dataset(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, seed=7)
        assert nearest_centroid_accuracy(dataset) > 0.95

    @pytest.mark.parametrize("seed", range(5))
    def test_accuracy_grows_with_separation(self, seed):
        """분리도가 커지면 최근접 중심 정확도가 (0.05 허용 오차 안에서) 줄지 않는다"""
        accuracies = []
        for separation in (0.0, 1.0, 3.0):
            cohort = synth_cohort(seed=seed, snp_count=40, class_separation=separation)
            dataset, _ = build_dataset(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, seed=seed)
            accuracies.append(nearest_centroid_accuracy(dataset))
        for weaker, stronger in zip(accuracies, accuracies[1:]):
            assert weaker <= stronger + 0.05

    def test_split_layout_keeps_each_signal_in_its_pair(self):
        """split: C/M은 CN만, G/P는 AD만 나머지와 구분한다"""
        cohort = synth_cohort(seed=2, snp_count=40, signal_layout="split")
        dataset, _ = build_dataset(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, seed=2)
        train = dataset.train
        mri_means = np.stack([train.mri[train.labels == c].mean(axis=0) for c in range(3)])
        pet_means = np.stack([train.pet[train.labels == c].mean(axis=0) for c in range(3)])
        # MCI와 AD는 MRI에서 구분되지 않고, CN과 MCI는 PET에서 구분되지 않는다
        assert np.linalg.norm(mri_means[1] - mri_means[2]) < 0.5 * np.linalg.norm(mri_means[0] - mri_means[1])
        assert np.linalg.norm(pet_means[0] - pet_means[1]) < 0.5 * np.linalg.norm(pet_means[2] - pet_means[1])

    def test_save_load_round_trip(self, tmp_path, synthetic_dataset):
        synthetic_dataset.save(tmp_path)
        loaded = PreparedDataset.load(tmp_path)
        assert loaded.manifest["counts"]["subjects"] == 60
        assert loaded.test.subject_ids == synthetic_dataset.test.subject_ids
        np.testing.assert_array_equal(loaded.train.genetic, synthetic_dataset.train.genetic)

    def test_top_k_limits_genetic_width(self):
        cohort = synth_cohort(seed=4, n_per_class=6, snp_count=30, img_width=4)
        dataset, report = build_dataset(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, top_k=5)
        assert dataset.widths["G"] == 5
        assert len(report) == 30
