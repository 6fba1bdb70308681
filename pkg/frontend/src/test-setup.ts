import { cleanup } from "@testing-library/react";
import { afterEach } from "vitest";

// jsdom ships neither object URLs nor media/canvas backends; give the
// pieces the app touches safe defaults that individual tests refine.
if (!URL.createObjectURL) {
  URL.createObjectURL = () => "blob:stub";
}
if (!URL.revokeObjectURL) {
  URL.revokeObjectURL = () => {};
}

afterEach(() => {
  cleanup();
  window.location.hash = "";
});
