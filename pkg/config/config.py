import os
import yaml


# 配置文件缺失时使用的内置默认值
_BUILTIN_DEFAULTS = {
    'query_cap': 65536,
    'max_state_bytes': 4096,
    'max_value_bits': 64,
    'max_enumeration_bits': 24,
    'exhaustive_pair_limit': 262144,
    'correctness_sample_pairs': 4096,
    'default_delta': 0.01,
    'max_workers': 4,
    'negligibility_exponents': [1, 2],
    'slow_operation_seconds': 5.0,
    'log_level': 'INFO',
}


class Config:
    BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    CONFIG_DIR = os.path.join(BASE_DIR, 'config')
    DATA_DIR = os.path.join(BASE_DIR, 'data')
    TEST_CASES_DIR = os.path.join(DATA_DIR, 'test_cases')
    REPORT_DIR = os.path.join(BASE_DIR, 'reports')
    PROFILE_FILE = os.path.join(CONFIG_DIR, 'lab_config.yaml')

    PROFILE_ENV = 'CSSLAB_PROFILE'
    WORKERS_ENV = 'CSSLAB_MAX_WORKERS'

    # 当前配置缓存
    _profile = None
    _profile_name = None

    @classmethod
    def get_profile(cls, profile_name=None):
        """获取实验配置
        :param profile_name: 可选，指定配置名称；为空时依次取环境变量、current_profile
        """
        if profile_name:
            return cls._get_profile_by_name(profile_name)

        if cls._profile is not None:
            return cls._profile

        data = cls._read_profile_file()
        name = os.environ.get(cls.PROFILE_ENV) or data.get('current_profile', 'default')
        cls._profile_name = str(name).strip()
        cls._profile = {**_BUILTIN_DEFAULTS, **(data.get(cls._profile_name) or {})}
        return cls._profile

    @classmethod
    def use_profile(cls, profile_name):
        """切换当前配置（命令行 --profile 使用）"""
        cls._profile_name = profile_name
        cls._profile = cls._get_profile_by_name(profile_name)
        return cls._profile

    @classmethod
    def profile_name(cls):
        cls.get_profile()
        return cls._profile_name

    @classmethod
    def setting(cls, key, default=None):
        """读取单个配置项"""
        return cls.get_profile().get(key, default)

    @classmethod
    def max_workers(cls):
        """并发上限：环境变量优先于配置文件"""
        raw = os.environ.get(cls.WORKERS_ENV)
        if raw:
            try:
                return max(1, int(raw))
            except ValueError:
                print(f"忽略无效的 {cls.WORKERS_ENV}: {raw}")
        return max(1, int(cls.setting('max_workers', 1)))

    @classmethod
    def reset(cls):
        cls._profile = None
        cls._profile_name = None

    @classmethod
    def _get_profile_by_name(cls, profile_name):
        """根据名称获取配置"""
        data = cls._read_profile_file()
        if profile_name not in data:
            raise KeyError(f"未知的配置名称: {profile_name}")
        return {**_BUILTIN_DEFAULTS, **(data.get(profile_name) or {})}

    @classmethod
    def _read_profile_file(cls):
        if not os.path.exists(cls.PROFILE_FILE):
            return {}
        try:
            with open(cls.PROFILE_FILE, 'r', encoding='utf-8') as f:
                return yaml.safe_load(f) or {}
        except Exception as e:
            print(f"加载实验配置失败: {str(e)}")
            return {}
