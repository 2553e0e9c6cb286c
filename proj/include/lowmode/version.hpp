#pragma once

#define LOWMODE_VERSION "0.1.0"
