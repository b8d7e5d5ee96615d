// Display formatting. Every number shown in the UI passes through here,
// and every one of them originated in a service response.

export function percent(fraction: number): string {
  return `${(fraction * 100).toFixed(1)}%`;
}

export function fixed(value: number, places = 3): string {
  return value.toFixed(places);
}

export function seconds(value: number): string {
  return `${value.toFixed(1)} s`;
}

export function skillStatusLabel(status: string): string {
  switch (status) {
    case "trained":
      return "trained";
    case "pending_demos":
      return "needs demonstrations";
    case "training":
      return "training";
    default:
      return status;
  }
}
