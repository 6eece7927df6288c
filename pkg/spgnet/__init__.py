# Copyright 2026 The spgnet developers.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

# http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Two-stage person image generation.

Stage one (SPATN) transfers the source parsing map to the target pose; stage two (SPGNet) renders the target
image from the source image, the target pose, the predicted parsing and a flow field. Everything runs on a small
reverse-mode autodiff core over numpy arrays.
"""

__version__ = "0.1.0"
