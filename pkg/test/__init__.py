# Copyright pbe-dg contributors. All Rights Reserved.
