"""
데이터 파이프라인 - 원본 테이블 파싱, SNP 필터, 코호트 구성, 합성 데이터
"""
from .batch import CLASS_INDEX, CLASS_NAMES, ModalBatch, iter_batches
from .tables import (
    ClinicalTable,
    FeatureVectorTable,
    GenotypeTable,
    SiteInfo,
    parse_clinical,
    parse_feature_vectors,
    parse_genotypes,
    write_tables,
)
from .genotype import (
    SnpFilterThresholds,
    encode_alleles,
    encode_genotype_table,
    filter_snps,
    hwe_test,
    select_top_k_variance,
    snp_site_report,
)
from .cohort import (
    PreparedDataset,
    build_dataset,
    intersect_cohort,
    normalize_clinical,
    split_stratified,
    standardize,
)
from .synthetic import SynthSpec, SyntheticCohort, synth_cohort

__all__ = [
    'CLASS_INDEX',
    'CLASS_NAMES',
    'ModalBatch',
    'iter_batches',
    'ClinicalTable',
    'FeatureVectorTable',
    'GenotypeTable',
    'SiteInfo',
    'parse_clinical',
    'parse_feature_vectors',
    'parse_genotypes',
    'write_tables',
    'SnpFilterThresholds',
    'encode_alleles',
    'encode_genotype_table',
    'filter_snps',
    'hwe_test',
    'select_top_k_variance',
    'snp_site_report',
    'PreparedDataset',
    'build_dataset',
    'intersect_cohort',
    'normalize_clinical',
    'split_stratified',
    'standardize',
    'SynthSpec',
    'SyntheticCohort',
    'synth_cohort',
]
