#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
局部纯度辅助工具
"""
