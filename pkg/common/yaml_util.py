import os
import yaml
from config.config import Config
from common.logger import Logger


class YamlUtil:
    @staticmethod
    def _resolve(file_path):
        if not os.path.isabs(file_path):
            file_path = os.path.join(Config.BASE_DIR, file_path)
        return os.path.normpath(file_path)

    @staticmethod
    def read_yaml(file_path):
        """读取YAML（或JSON）文件并返回解析后的内容
        参数:
            file_path (str): 文件路径（绝对路径，或相对于项目根目录）
        返回:
            dict/list: 解析后的内容
        异常:
            FileNotFoundError: 当文件不存在时抛出
            yaml.YAMLError: 当解析错误时抛出
        """
        file_path = YamlUtil._resolve(file_path)
        if not os.path.exists(file_path):
            Logger.error(f"YAML文件不存在：{file_path}")
            raise FileNotFoundError(f"文件不存在: {file_path}")

        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                return yaml.safe_load(f)
        except yaml.YAMLError as e:
            error_msg = f"YAML解析错误：{file_path}-{str(e)}"
            Logger.error(error_msg)
            raise yaml.YAMLError(error_msg) from e
        except Exception as e:
            Logger.error(f"处理YAML文件时发生意外错误: {file_path} - {str(e)}")
            raise

    @staticmethod
    def dump(data):
        """序列化为YAML文本（保持键的原有顺序）"""
        return yaml.safe_dump(data, allow_unicode=True, sort_keys=False)

    @staticmethod
    def write_yaml(file_path, data):
        """将数据写入YAML文件
        参数:
            file_path (str): 文件路径
            data (dict/list): 要写入的数据
        """
        file_path = YamlUtil._resolve(file_path)
        try:
            os.makedirs(os.path.dirname(file_path), exist_ok=True)
            with open(file_path, 'w', encoding='utf-8') as f:
                f.write(YamlUtil.dump(data))
            Logger.info(f"YAML文件写入成功: {file_path}")
        except PermissionError as e:
            Logger.error(f"文件写入权限不足: {file_path} - {str(e)}")
            raise
        except Exception as e:
            Logger.error(f"写入YAML文件时发生错误: {file_path} - {str(e)}")
            raise
