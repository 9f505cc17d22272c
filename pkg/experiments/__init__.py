"""
실험 오케스트레이션 - 설정 문서, 프리셋, LangGraph 실행 파이프라인
"""
